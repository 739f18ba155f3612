#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace blockformer::storage {

struct PackItem {
    std::uint32_t id = 0;
    std::uint32_t class_id = 0;
    std::size_t bytes = 0;
};

struct PagePlan {
    std::vector<std::uint32_t> items;  // item ids in placement order
    std::size_t used = 0;
};

struct PackResult {
    std::vector<PagePlan> pages;
    std::size_t stage1_pages = 0;  // page count had stage 2 been skipped
};

/// First-fit-decreasing: items by size descending, ties by id ascending, each
/// into the first page with room.
std::vector<PagePlan> first_fit_decreasing(std::span<const PackItem> items, std::size_t capacity);

/// Stage 1 packs each equivalence class separately with first-fit-decreasing.
/// Stage 2 pools the items of every non-full page (used < capacity) and
/// repacks them together across classes. Full stage-1 pages come first, in
/// class order. If the repack would not save pages, the stage-1 non-full
/// pages are kept, so the result never exceeds stage1_pages.
/// Throws InvalidArgumentError for an item larger than capacity.
PackResult pack_two_stage(std::span<const PackItem> items, std::size_t capacity);

}  // namespace blockformer::storage
