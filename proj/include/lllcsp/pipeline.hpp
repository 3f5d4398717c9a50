#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "lllcsp/csp.hpp"
#include "lllcsp/depgraph.hpp"
#include "lllcsp/guide.hpp"
#include "lllcsp/marginal.hpp"

namespace lllcsp {

/// Exact |S_{P_s}|: product over components of the square graph on dangerous
/// constraints of the number of satisfying completions of their unassigned variables.
BigInt count_residual_exact(const Instance& inst, const GuideResult& guide, const Caps& caps = {});

struct StepMarginal {
    int var = -1;
    int value = -1;
    bool event_holds = false;
    MarginalEstimate marginal;
};

struct CountResult {
    BigRational estimate{0};
    double relative_error_bound = 0;
    BigInt residual{0};
    GuideResult guide;
    std::vector<StepMarginal> steps;  ///< step i estimates mu[v*_i = a*_i | P_{i-1}]
    ConditionReport regime;
    Params params;
    std::vector<std::string> warnings;
};

/// Deterministic approximate count.
CountResult count_approx(const Instance& inst, const Params& params, const Caps& caps = {});

/// Product-measure start, then repeatedly resample the lowest violated
/// constraint. Throws ErrorKind::regime once `resample_cap` is exceeded.
std::vector<int> moser_tardos(
    const Instance& inst, std::uint64_t seed, std::uint64_t resample_cap, std::uint64_t* resamples = nullptr);

enum class SamplePath { normal, early_termination_event, early_termination_component };

const char* to_string(SamplePath path);

struct SampleResult {
    std::vector<int> assignment;
    SamplePath path = SamplePath::normal;
};

/// Approximate uniform sampler. Marginal estimates, event checks and
/// component completion lists are cached per prefix, so repeated draws on
/// one instance share work. Construction verifies satisfiability.
class Sampler {
public:
    Sampler(const Instance& inst, const Params& params, const Caps& caps = {});
    ~Sampler();
    Sampler(const Sampler&) = delete;
    Sampler& operator=(const Sampler&) = delete;

    SampleResult sample(std::uint64_t seed);

    int component_bound() const { return component_bound_; }
    std::size_t marginal_queries() const { return marginal_queries_; }
    double worst_tv_bound() const { return worst_tv_bound_; }

private:
    std::vector<int> fallback(std::uint64_t seed) const;

    const Instance& inst_;
    Params params_;
    Caps caps_;
    LineGraph graph_;
    std::unique_ptr<Potential> potential_;
    int component_bound_ = 0;
    std::size_t marginal_queries_ = 0;
    double worst_tv_bound_ = 0;
    std::map<std::vector<int>, bool> event_cache_;
    std::map<std::vector<int>, std::vector<BigRational>> marginal_cache_;
    std::map<std::vector<int>, std::vector<std::vector<int>>> completion_cache_;
};

SampleResult sample_approx(const Instance& inst, const Params& params, std::uint64_t seed, const Caps& caps = {});

} // namespace lllcsp
