#include "blockformer/storage/lsh.hpp"

#include <cmath>
#include <string>

#include "blockformer/common/error.hpp"
#include "blockformer/common/random.hpp"

namespace blockformer::storage {

void DedupConfig::validate() const {
    if (!(threshold_t >= 0.0)) throw InvalidArgumentError("threshold_t must be non-negative");
    if (hyperplanes == 0 || bands == 0) throw InvalidArgumentError("hyperplanes and bands must be positive");
    if (hyperplanes % bands != 0) {
        throw InvalidArgumentError("hyperplanes (" + std::to_string(hyperplanes) +
                                   ") must be divisible by bands (" + std::to_string(bands) + ")");
    }
}

HyperplaneLsh::HyperplaneLsh(std::size_t block_dim, const DedupConfig& cfg)
    : block_dim_(block_dim), hyperplanes_(cfg.hyperplanes), bands_(cfg.bands) {
    cfg.validate();
    if (block_dim == 0) throw InvalidArgumentError("LSH block_dim must be positive");
    const std::size_t dim = block_dim * block_dim;
    planes_.resize(hyperplanes_ * dim);
    Rng rng(derive_seed(cfg.seed, "lsh-hyperplanes"));
    for (std::size_t h = 0; h < hyperplanes_; ++h) {
        double norm = 0.0;
        std::vector<double> v(dim);
        for (double& x : v) {
            x = rng.normal();
            norm += x * x;
        }
        norm = std::sqrt(norm);
        for (std::size_t i = 0; i < dim; ++i) planes_[h * dim + i] = static_cast<float>(v[i] / norm);
    }
}

Signature HyperplaneLsh::signature(const TensorBlock& b) const {
    if (b.rows > block_dim_ || b.cols > block_dim_) {
        throw InvalidArgumentError("LSH: " + std::to_string(b.rows) + "x" + std::to_string(b.cols) +
                                   " block exceeds hyperplane block_dim " +
                                   std::to_string(block_dim_));
    }
    const std::size_t dim = block_dim_ * block_dim_;
    Signature s;
    s.bits = hyperplanes_;
    s.words.assign((hyperplanes_ + 63) / 64, 0);
    for (std::size_t h = 0; h < hyperplanes_; ++h) {
        const float* plane = planes_.data() + h * dim;
        double dot = 0.0;
        for (std::size_t r = 0; r < b.rows; ++r) {
            for (std::size_t c = 0; c < b.cols; ++c) {
                dot += double(b.at(r, c)) * double(plane[r * block_dim_ + c]);
            }
        }
        if (dot >= 0.0) s.words[h / 64] |= std::uint64_t{1} << (h % 64);
    }
    return s;
}

std::vector<std::uint64_t> HyperplaneLsh::band_keys(const Signature& s) const {
    const std::size_t width = hyperplanes_ / bands_;
    std::vector<std::uint64_t> keys(bands_);
    for (std::size_t band = 0; band < bands_; ++band) {
        std::uint64_t h = mix64(band);
        std::uint64_t acc = 0;
        for (std::size_t i = 0; i < width; ++i) {
            acc = (acc << 1) | (s.bit(band * width + i) ? 1u : 0u);
            if ((i + 1) % 64 == 0) {
                h = mix64(h ^ acc);
                acc = 0;
            }
        }
        keys[band] = mix64(h ^ acc ^ (width << 56));
    }
    return keys;
}

}  // namespace blockformer::storage
