#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "cotprompt/tensor.hpp"

namespace cotprompt {

// Mixes a base seed with a component tag and index so that every component
// draws from its own stream (splitmix64 finalizer over an FNV-1a tag hash).
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index = 0);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double normal(double mean = 0.0, double stddev = 1.0) {
        return std::normal_distribution<double>(mean, stddev)(engine_);
    }
    std::mt19937_64& engine() noexcept { return engine_; }

    // Tensor of i.i.d. N(0, stddev^2) values.
    Tensor gaussian(Shape shape, double stddev);

private:
    std::mt19937_64 engine_;
};

// FNV-1a 64-bit content hash.
class ContentHash {
public:
    ContentHash& bytes(const void* data, std::size_t n);
    ContentHash& u64(std::uint64_t v) { return bytes(&v, sizeof v); }
    ContentHash& str(std::string_view s) { return u64(s.size()).bytes(s.data(), s.size()); }
    ContentHash& tensor(const Tensor& t);
    std::uint64_t value() const noexcept { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string hex64(std::uint64_t v);

}  // namespace cotprompt
