#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace pcalab {

// ---------------------------------------------------------------------------
// Error taxonomy. Every throwing contract in the library uses one of these so
// callers (and the CLI harness) can map failures to stable identifiers.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidInput : Error {
    explicit InvalidInput(const std::string& what) : Error("InvalidInput: " + what) {}
};

// top-k eigenvalue ~ 0, so condition numbers / Ky Fan ratios are meaningless
struct SingularTopSpace : Error {
    explicit SingularTopSpace(const std::string& what) : Error("SingularTopSpace: " + what) {}
};

// an oracle answer broke the unit-norm / span containment contract
struct OracleContractViolation : Error {
    explicit OracleContractViolation(const std::string& what)
        : Error("OracleContractViolation: " + what) {}
};

// reference matrix has (numerically) zero top-k mass; error ratios undefined
struct DegenerateTarget : Error {
    explicit DegenerateTarget(const std::string& what) : Error("DegenerateTarget: " + what) {}
};

// residual decomposition has a singular selected block (inverse would blow up)
struct DegenerateResidual : Error {
    explicit DegenerateResidual(const std::string& what) : Error("DegenerateResidual: " + what) {}
};

// iteration budget ran out before the requested certificate was reached
struct BudgetExhausted : Error {
    BudgetExhausted(const std::string& what, double achieved)
        : Error("BudgetExhausted: " + what), achieved_delta(achieved) {}
    double achieved_delta;  // best certified mass at the point of giving up
};

struct PrecondUnmet : Error {
    explicit PrecondUnmet(const std::string& what) : Error("PrecondUnmet: " + what) {}
};

// parameter regime fails the guardrail that makes the guarantee meaningful
struct RegimeRejected : Error {
    explicit RegimeRejected(const std::string& what) : Error("RegimeRejected: " + what) {}
};

// requested counterexample parameters fall outside the constructible window
struct NotInRegime : Error {
    explicit NotInRegime(const std::string& what) : Error("NotInRegime: " + what) {}
};

// outlier filter removed (almost) all sample mass
struct FilterCollapse : Error {
    explicit FilterCollapse(const std::string& what) : Error("FilterCollapse: " + what) {}
};

struct PerturbationTooLarge : Error {
    explicit PerturbationTooLarge(const std::string& what)
        : Error("PerturbationTooLarge: " + what) {}
};

// ---------------------------------------------------------------------------
// Seeded randomness. All stochastic code paths take an explicit Rng (or a
// uint64 seed) so that every experiment is replayable bit-for-bit.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derive a substream seed from (seed, stream id) without correlation between ids.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
    splitmix64(s);
    return splitmix64(s);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t raw() { return gen_(); }
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(gen_); }
    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(gen_);
    }
    double gaussian() { return std::normal_distribution<double>(0.0, 1.0)(gen_); }
    // uniform integer in [lo, hi] inclusive
    std::int64_t integer(std::int64_t lo, std::int64_t hi) {
        return std::uniform_int_distribution<std::int64_t>(lo, hi)(gen_);
    }
    bool coin() { return (gen_() & 1ULL) != 0; }

    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
};

// ---------------------------------------------------------------------------
// Tiny deterministic thread pool helper: runs fn(i) for i in [0, n) and joins.
// Each index must write only to its own slot, so output order is independent
// of scheduling.
// ---------------------------------------------------------------------------

inline void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    unsigned hw = std::thread::hardware_concurrency();
    if (jobs == 0) jobs = hw ? hw : 1;
    if (jobs > n) jobs = static_cast<unsigned>(n);
    if (jobs <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    std::atomic<std::size_t> next{0};
    for (unsigned w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                fn(i);
            }
        });
    }
    for (auto& t : workers) t.join();
}

}  // namespace pcalab
