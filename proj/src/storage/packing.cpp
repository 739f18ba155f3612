#include "blockformer/storage/packing.hpp"

#include <algorithm>
#include <map>
#include <string>

#include "blockformer/common/error.hpp"

namespace blockformer::storage {

std::vector<PagePlan> first_fit_decreasing(std::span<const PackItem> items, std::size_t capacity) {
    std::vector<PackItem> order(items.begin(), items.end());
    std::stable_sort(order.begin(), order.end(), [](const PackItem& a, const PackItem& b) {
        return a.bytes != b.bytes ? a.bytes > b.bytes : a.id < b.id;
    });
    std::vector<PagePlan> pages;
    for (const auto& item : order) {
        if (item.bytes > capacity) {
            throw InvalidArgumentError("block " + std::to_string(item.id) + " needs " +
                                       std::to_string(item.bytes) + " bytes, page capacity is " +
                                       std::to_string(capacity));
        }
        auto it = std::find_if(pages.begin(), pages.end(), [&](const PagePlan& p) {
            return p.used + item.bytes <= capacity;
        });
        if (it == pages.end()) {
            pages.emplace_back();
            it = std::prev(pages.end());
        }
        it->items.push_back(item.id);
        it->used += item.bytes;
    }
    return pages;
}

PackResult pack_two_stage(std::span<const PackItem> items, std::size_t capacity) {
    if (capacity == 0) throw InvalidArgumentError("page capacity must be positive");
    std::map<std::uint32_t, std::vector<PackItem>> by_class;
    std::map<std::uint32_t, PackItem> by_id;
    for (const auto& item : items) {
        by_class[item.class_id].push_back(item);
        by_id[item.id] = item;
    }

    PackResult result;
    std::vector<PagePlan> non_full;
    for (const auto& [cls, members] : by_class) {
        for (auto& page : first_fit_decreasing(members, capacity)) {
            ++result.stage1_pages;
            if (page.used < capacity) {
                non_full.push_back(std::move(page));
            } else {
                result.pages.push_back(std::move(page));
            }
        }
    }

    std::vector<PackItem> pool;
    for (const auto& page : non_full) {
        for (std::uint32_t id : page.items) pool.push_back(by_id.at(id));
    }
    auto repacked = first_fit_decreasing(pool, capacity);
    auto& tail = repacked.size() < non_full.size() ? repacked : non_full;
    for (auto& page : tail) result.pages.push_back(std::move(page));
    return result;
}

}  // namespace blockformer::storage
