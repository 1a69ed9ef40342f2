#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace cvbias::rng {

using Engine = std::mt19937_64;

/// Purposes that get their own independent stream within one replication.
enum class Stream : std::uint64_t {
    Path = 1,
    Errors = 2,
    Regressors = 3,
    FixedDesign = 4,
};

/// Derive a 64-bit seed from a master seed and a key path.
///
/// The mapping depends only on (master, key); replication r of cell T always
/// receives the same stream no matter which thread runs it or in what order.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> key);

/// Engine keyed on (seed, key...).
Engine make_engine(std::uint64_t seed, std::initializer_list<std::uint64_t> key);

}  // namespace cvbias::rng
