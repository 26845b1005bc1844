#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace nlar {

using Engine = std::mt19937_64;

/// Mixes a parent seed with a key into an independent child seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t key) noexcept;
std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag) noexcept;

/// A seeded random stream. Children are derived by key so that the draws of
/// one consumer never depend on how many draws another consumer made.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }
    Engine& engine() noexcept { return engine_; }

    RngStream child(std::uint64_t key) const { return RngStream(derive_seed(seed_, key)); }
    RngStream child(std::string_view tag) const { return RngStream(derive_seed(seed_, tag)); }

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }

private:
    std::uint64_t seed_;
    Engine engine_;
};

/// Seed drawn from system entropy, for runs that did not pin one.
std::uint64_t entropy_seed();

}  // namespace nlar
