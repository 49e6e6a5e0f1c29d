#include "cotprompt/random.hpp"

#include <cstdio>

namespace cotprompt {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index) {
    ContentHash h;
    h.str(tag);
    return splitmix64(splitmix64(base ^ h.value()) + index);
}

Tensor Rng::gaussian(Shape shape, double stddev) {
    Tensor t(std::move(shape));
    std::normal_distribution<double> dist(0.0, stddev);
    for (auto& x : t.data()) x = dist(engine_);
    return t;
}

ContentHash& ContentHash::bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        state_ ^= p[i];
        state_ *= 0x100000001b3ULL;
    }
    return *this;
}

ContentHash& ContentHash::tensor(const Tensor& t) {
    u64(t.rank());
    for (auto s : t.shape()) u64(s);
    return bytes(t.data().data(), t.size() * sizeof(double));
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace cotprompt
