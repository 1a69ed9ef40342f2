#include "cvbias/rng.hpp"

#include <vector>

namespace cvbias::rng {

namespace {

std::seed_seq make_seq(std::uint64_t master, std::initializer_list<std::uint64_t> key) {
    std::vector<std::uint32_t> words;
    words.reserve(2 * (key.size() + 1));
    auto push = [&](std::uint64_t v) {
        words.push_back(static_cast<std::uint32_t>(v & 0xffffffffULL));
        words.push_back(static_cast<std::uint32_t>(v >> 32));
    };
    push(master);
    for (auto k : key) push(k);
    return std::seed_seq(words.begin(), words.end());
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> key) {
    auto seq = make_seq(master, key);
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

Engine make_engine(std::uint64_t seed, std::initializer_list<std::uint64_t> key) {
    auto seq = make_seq(seed, key);
    return Engine(seq);
}

}  // namespace cvbias::rng
