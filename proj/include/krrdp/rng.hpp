#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace krrdp {

// Counter-based random streams.
//
// Every stream is a pure function of (root seed, StreamKey): the Philox4x32-10
// block cipher is keyed by the root seed and encrypts a 128-bit counter built
// from the key fields plus a running block index. Two streams with distinct
// keys never share a counter, so work can be split across threads in any
// order without changing a single drawn value.

enum class Purpose : std::uint32_t {
    OuterSample = 1,    // draws of x ~ mu_t
    InnerMc = 2,        // continuation-value MC at a training point
    OriginEval = 3,     // time-0 Bellman value at x0
    PolicyPath = 4,     // forward paths for the policy lower bound
    PolicyInner = 5,    // inner MC inside the policy lower bound
    NystromCenters = 6,
    CrossValidation = 7,
    Lsmc = 8,
    Diagnostic = 9,
    Test = 100,
};

struct StreamKey {
    Purpose purpose = Purpose::Test;
    std::uint32_t stage = 0;
    std::uint64_t index = 0;
};

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

// SplitMix64 finalizer; used to derive child seeds (e.g. per repetition).
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t child);

class Stream {
public:
    Stream(std::uint64_t seed, StreamKey key);

    std::uint64_t next_u64();
    // Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform();
    double normal();
    void fill_normal(std::span<double> out);
    // Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound);

private:
    void refill();

    std::array<std::uint32_t, 2> key_{};
    std::array<std::uint32_t, 4> counter_{};
    std::array<std::uint32_t, 4> block_{};
    int used_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace krrdp
