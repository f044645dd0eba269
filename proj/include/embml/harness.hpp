/**
 * @file harness.hpp
 * @brief Monte Carlo engine: threshold calibration, Pfa/Pd estimation, CFAR
 *        sweeps, Pd-vs-SCNR curves, mismatch contours and convergence studies.
 *
 * Trials are independent: each draws a fresh CUT and fresh secondary data from
 * its own counter-based stream, so results do not depend on the worker count.
 * Decisions everywhere are "statistic > threshold".
 */
#pragma once

#include "embml/detectors.hpp"
#include "embml/em.hpp"
#include "embml/errors.hpp"
#include "embml/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace embml {

/// A detector plus, for EM-BML-D, its iteration count.
struct DetectorSpec {
    DetectorId id = DetectorId::GLRT;
    int lMax = 0;

    std::string label() const {
        std::string s(detectorName(id));
        if (id == DetectorId::EM_BML_D) s += std::to_string(lMax);
        return s;
    }

    friend bool operator==(const DetectorSpec&, const DetectorSpec&) = default;
    friend auto operator<=>(const DetectorSpec& a, const DetectorSpec& b) {
        if (auto c = static_cast<int>(a.id) <=> static_cast<int>(b.id); c != 0) return c;
        return a.lMax <=> b.lMax;
    }
};

/// Parses a column label such as "AMF" or "EM_BML_D5".
inline std::optional<DetectorSpec> parseDetectorLabel(std::string_view label) {
    constexpr std::string_view em = "EM_BML_D";
    if (label.starts_with(em) && label.size() > em.size()) {
        int l = 0;
        for (char c : label.substr(em.size())) {
            if (c < '0' || c > '9') return std::nullopt;
            l = l * 10 + (c - '0');
        }
        return DetectorSpec{DetectorId::EM_BML_D, l};
    }
    if (auto id = parseDetectorId(label); id && *id != DetectorId::EM_BML_D) return DetectorSpec{*id, 0};
    return std::nullopt;
}

/// Canonical detector list: the given ids with EM-BML-D expanded over lMaxes, in enumeration order.
inline std::vector<DetectorSpec> expandDetectors(const std::vector<DetectorId>& ids, const std::vector<int>& lMaxes) {
    std::vector<DetectorSpec> out;
    for (DetectorId id : ids) {
        if (id == DetectorId::EM_BML_D) {
            for (int l : lMaxes) out.push_back({id, l});
        } else {
            out.push_back({id, 0});
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

struct TrialEnsemble {
    DetectorSpec detector;
    std::vector<double> statistics;  ///< ascending
    std::size_t trialCount = 0;
    ScenarioConfig scenario;

    TrialEnsemble(DetectorSpec d, std::vector<double> stats, ScenarioConfig cfg)
        : detector(d), statistics(std::move(stats)), trialCount(statistics.size()), scenario(std::move(cfg)) {
        std::sort(statistics.begin(), statistics.end());
    }
};

/// Number of null trials needed for a threshold at this Pfa.
inline std::size_t requiredTrials(double pfa) { return static_cast<std::size_t>(std::ceil(100.0 / pfa - 1e-9)); }

/// Order statistic at rank ceil(n (1 - pfa)) (1-based) of the null statistics.
inline double calibrateThreshold(const TrialEnsemble& ensemble, double pfa) {
    if (!(pfa > 0.0 && pfa < 1.0)) throw ValidationError("calibrateThreshold: pfa must lie in (0, 1)");
    const std::size_t n = ensemble.trialCount;
    if (n < requiredTrials(pfa))
        throw InsufficientTrials("calibrateThreshold: " + std::to_string(n) + " trials < 100/Pfa = " +
                                 std::to_string(requiredTrials(pfa)));
    // ceil(n (1 - pfa)) == n - floor(n pfa); the second form is exact for decimal pfa.
    const auto exceed = static_cast<std::size_t>(std::floor(static_cast<double>(n) * pfa * (1.0 + 1e-12)));
    return ensemble.statistics[n - exceed - 1];
}

struct RateEstimate {
    double rate = 0.0;
    double ci = 0.0;  ///< 95% binomial half-width
    std::size_t trials = 0;
};

inline double binomialHalfWidth(double p, std::size_t n) {
    return 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

inline RateEstimate estimateRate(std::span<const double> statistics, double threshold) {
    if (statistics.empty()) throw ValidationError("estimateRate: no statistics");
    const auto hits = std::count_if(statistics.begin(), statistics.end(), [&](double s) { return s > threshold; });
    const double rate = static_cast<double>(hits) / static_cast<double>(statistics.size());
    return {rate, binomialHalfWidth(rate, statistics.size()), statistics.size()};
}

/// Per-detector thresholds at one or more nominal Pfa values.
struct ThresholdTable {
    struct Entry {
        DetectorSpec detector;
        double pfa = 0.0;
        double threshold = 0.0;
    };
    std::vector<Entry> entries;
    ScenarioConfig scenario;

    std::optional<double> threshold(const DetectorSpec& d, double pfa) const {
        for (const auto& e : entries)
            if (e.detector == d && e.pfa == pfa) return e.threshold;
        return std::nullopt;
    }
};

/// Figure data: one row per grid point, one (rate, ci) pair per detector.
struct CurveResult {
    std::vector<std::string> axisNames;
    std::vector<std::vector<double>> axes;  ///< [row][axis]
    std::vector<DetectorSpec> detectors;
    std::vector<std::vector<double>> rate;  ///< [row][detector]
    std::vector<std::vector<double>> ci;    ///< [row][detector]
    std::vector<std::size_t> trials;        ///< [row]

    std::size_t rows() const noexcept { return axes.size(); }

    std::size_t column(const DetectorSpec& d) const {
        for (std::size_t i = 0; i < detectors.size(); ++i)
            if (detectors[i] == d) return i;
        throw ValidationError("CurveResult: detector " + d.label() + " not present");
    }

    double rateAt(std::size_t row, const DetectorSpec& d) const { return rate.at(row).at(column(d)); }
    double ciAt(std::size_t row, const DetectorSpec& d) const { return ci.at(row).at(column(d)); }
};

struct HarnessOptions {
    std::size_t workers = 1;
};

/// Raw per-trial output of one Monte Carlo block.
struct TrialBlock {
    std::vector<DetectorSpec> detectors;
    std::vector<std::vector<double>> stats;  ///< [detector][trial]; empty column for BENCHMARK
    std::vector<Complex> benchmarkProjection;  ///< v^H M^-1 z per trial (true M)
    double benchmarkNorm = 0.0;                ///< v^H M^-1 v (true M)

    const std::vector<double>& column(const DetectorSpec& d) const {
        for (std::size_t i = 0; i < detectors.size(); ++i)
            if (detectors[i] == d) return stats[i];
        throw ValidationError("TrialBlock: detector " + d.label() + " not present");
    }

    /// Clairvoyant statistics for a given true amplitude.
    std::vector<double> benchmark(Complex alpha) const {
        std::vector<double> out(benchmarkProjection.size());
        for (std::size_t t = 0; t < out.size(); ++t)
            out[t] = benchmarkValue(benchmarkProjection[t], benchmarkNorm, alpha);
        return out;
    }
};

namespace detail {

inline void parallelFor(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& body) {
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < count; i += workers) body(i);
        });
    for (auto& t : pool) t.join();
}

} // namespace detail

/// Largest EM iteration count among the detectors, or -1 if none is EM-BML-D.
inline int maxEmIterations(const std::vector<DetectorSpec>& detectors) {
    int emMax = -1;
    for (const auto& d : detectors)
        if (d.id == DetectorId::EM_BML_D) emMax = std::max(emMax, d.lMax);
    return emMax;
}

/**
 * Statistics of every adaptive detector on one batch, in `detectors` order.
 * S is factored once and shared; one EM run serves every EM-BML-D variant.
 * BENCHMARK entries are NaN (it needs the true covariance).
 */
inline std::vector<double> adaptiveStatistics(const DataBatch& batch, std::span<const Complex> v,
                                              const std::vector<DetectorSpec>& detectors, int emMax) {
    const SampleCovariance s = sampleCovariance(batch);
    const AdaptiveProjections p(batch.cut, v, CholeskyFactor(s.s));
    std::optional<EmTrace> trace;
    if (emMax >= 0) trace = runEm(batch, v, s, emMax, false);
    std::vector<double> out(detectors.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < detectors.size(); ++i) {
        const auto& d = detectors[i];
        switch (d.id) {
            case DetectorId::GLRT: out[i] = glrtValue(p); break;
            case DetectorId::AMF: out[i] = amfValue(p); break;
            case DetectorId::RAO: out[i] = raoValue(p); break;
            case DetectorId::ACE: out[i] = aceValue(p); break;
            case DetectorId::EM_BML_D: out[i] = trace->states[static_cast<std::size_t>(d.lMax)].logPostRatio; break;
            case DetectorId::BENCHMARK: break;
        }
    }
    return out;
}

/**
 * Runs `trials` independent trials of the scenario. A target is injected when
 * cfg.scnrDb is set, along the mismatched steering vector if cfg.cosSqPhi < 1.
 * The nominal steering vector is steeringVector(N, cfg.dopplerNorm).
 */
inline TrialBlock runTrials(const ScenarioConfig& cfg, const std::vector<DetectorSpec>& detectors, std::size_t trials,
                            const HarnessOptions& opts = {}) {
    cfg.validate();
    const HermitianMatrix m = buildCovariance(cfg);
    const CholeskyFactor mFactor(m);
    const ComplexVector v = steeringVector(cfg.n, cfg.dopplerNorm);
    const ComplexVector vTrue = cfg.cosSqPhi < 1.0 ? mismatchedSteering(v, mFactor, cfg.cosSqPhi) : v;
    const ComplexVector wv = mFactor.whiten(v);

    const int emMax = maxEmIterations(detectors);

    TrialBlock block;
    block.detectors = detectors;
    block.stats.assign(detectors.size(), {});
    for (std::size_t i = 0; i < detectors.size(); ++i)
        if (detectors[i].id != DetectorId::BENCHMARK) block.stats[i].resize(trials);
    block.benchmarkProjection.resize(trials);
    block.benchmarkNorm = squaredNorm(wv);

    detail::parallelFor(trials, opts.workers, [&](std::size_t t) {
        DataBatch batch = sampleBatch(cfg, mFactor, t);
        if (cfg.scnrDb) batch = injectTarget(std::move(batch), vTrue, mFactor, *cfg.scnrDb, cfg.targetPhase);
        const std::vector<double> values = adaptiveStatistics(batch, v, detectors, emMax);
        for (std::size_t i = 0; i < detectors.size(); ++i)
            if (detectors[i].id != DetectorId::BENCHMARK) block.stats[i][t] = values[i];
        block.benchmarkProjection[t] = dot(wv, mFactor.whiten(batch.cut));
    });
    return block;
}

/// True amplitude the clairvoyant detector assumes at this SCNR (nominal v, true M).
inline Complex benchmarkAlpha(const ScenarioConfig& cfg, double scnrDb) {
    const CholeskyFactor f(buildCovariance(cfg));
    return targetAmplitude(steeringVector(cfg.n, cfg.dopplerNorm), f, scnrDb, cfg.targetPhase);
}

/// Seed tags for the independent sub-experiments.
enum class SeedTag : std::uint64_t { Calibration = 1, Evaluation = 2, Convergence = 3 };

inline ScenarioConfig withSeed(ScenarioConfig cfg, SeedTag tag, std::uint64_t index = 0) {
    cfg.masterSeed = deriveSeed(cfg.masterSeed, static_cast<std::uint64_t>(tag), index);
    return cfg;
}

/// Null ensemble plus thresholds for every non-benchmark detector.
struct Calibration {
    ThresholdTable table;
    TrialBlock nullBlock;
    double pfa = 0.0;

    /// Threshold of `d`; the benchmark is calibrated on demand for the amplitude alpha.
    double threshold(const DetectorSpec& d, Complex alpha = {}) const {
        if (d.id == DetectorId::BENCHMARK) {
            TrialEnsemble e(d, nullBlock.benchmark(alpha), table.scenario);
            return calibrateThreshold(e, pfa);
        }
        return *table.threshold(d, pfa);
    }
};

inline Calibration calibrate(const ScenarioConfig& cfg, const std::vector<DetectorSpec>& detectors, double pfa,
                             std::size_t trials, const HarnessOptions& opts = {}) {
    if (trials < requiredTrials(pfa))
        throw InsufficientTrials("calibrate: " + std::to_string(trials) + " trials < 100/Pfa");
    ScenarioConfig nullCfg = withSeed(cfg, SeedTag::Calibration);
    nullCfg.scnrDb.reset();
    Calibration cal;
    cal.pfa = pfa;
    cal.nullBlock = runTrials(nullCfg, detectors, trials, opts);
    cal.table.scenario = nullCfg;
    for (const auto& d : detectors) {
        if (d.id == DetectorId::BENCHMARK) continue;
        TrialEnsemble e(d, cal.nullBlock.column(d), nullCfg);
        cal.table.entries.push_back({d, pfa, calibrateThreshold(e, pfa)});
    }
    return cal;
}

/**
 * Empirical Pfa over a CNR grid (at the nominal rho) and a rho grid (at the
 * nominal CNR), with thresholds calibrated once at the nominal scenario.
 * Rows carry axes (cnr_db, rho). The benchmark is not part of a CFAR sweep.
 */
inline CurveResult cfarSweep(const ScenarioConfig& nominal, double pfa, const std::vector<double>& cnrGrid,
                             const std::vector<double>& rhoGrid, const std::vector<DetectorSpec>& detectorsIn,
                             std::size_t calibrationTrials, std::size_t evaluationTrials,
                             const HarnessOptions& opts = {}) {
    std::vector<DetectorSpec> detectors;
    for (const auto& d : detectorsIn)
        if (d.id != DetectorId::BENCHMARK) detectors.push_back(d);
    const Calibration cal = calibrate(nominal, detectors, pfa, calibrationTrials, opts);

    CurveResult out;
    out.axisNames = {"cnr_db", "rho"};
    out.detectors = detectors;
    std::vector<std::pair<double, double>> points;
    for (double c : cnrGrid) points.emplace_back(c, nominal.rho);
    for (double r : rhoGrid) points.emplace_back(nominal.cnrDb, r);
    for (std::size_t i = 0; i < points.size(); ++i) {
        ScenarioConfig cfg = withSeed(nominal, SeedTag::Evaluation, i);
        cfg.cnrDb = points[i].first;
        cfg.rho = points[i].second;
        cfg.scnrDb.reset();
        const TrialBlock block = runTrials(cfg, detectors, evaluationTrials, opts);
        out.axes.push_back({points[i].first, points[i].second});
        std::vector<double> rates, cis;
        for (const auto& d : detectors) {
            const RateEstimate r = estimateRate(block.column(d), cal.threshold(d));
            rates.push_back(r.rate);
            cis.push_back(r.ci);
        }
        out.rate.push_back(std::move(rates));
        out.ci.push_back(std::move(cis));
        out.trials.push_back(evaluationTrials);
    }
    return out;
}

/// Pd per detector over an SCNR grid for matched targets. Rows carry axis scnr_db.
inline CurveResult pdCurve(const ScenarioConfig& cfgIn, double pfa, const std::vector<double>& scnrGridDb,
                           const std::vector<DetectorSpec>& detectors, std::size_t calibrationTrials,
                           std::size_t evaluationTrials, const HarnessOptions& opts = {}) {
    ScenarioConfig base = cfgIn;
    base.cosSqPhi = 1.0;
    const Calibration cal = calibrate(base, detectors, pfa, calibrationTrials, opts);

    CurveResult out;
    out.axisNames = {"scnr_db"};
    out.detectors = detectors;
    for (std::size_t i = 0; i < scnrGridDb.size(); ++i) {
        ScenarioConfig cfg = withSeed(base, SeedTag::Evaluation, i);
        cfg.scnrDb = scnrGridDb[i];
        const TrialBlock block = runTrials(cfg, detectors, evaluationTrials, opts);
        const Complex alpha = benchmarkAlpha(base, scnrGridDb[i]);
        out.axes.push_back({scnrGridDb[i]});
        std::vector<double> rates, cis;
        for (const auto& d : detectors) {
            RateEstimate r;
            if (d.id == DetectorId::BENCHMARK)
                r = estimateRate(block.benchmark(alpha), cal.threshold(d, alpha));
            else
                r = estimateRate(block.column(d), cal.threshold(d));
            rates.push_back(r.rate);
            cis.push_back(r.ci);
        }
        out.rate.push_back(std::move(rates));
        out.ci.push_back(std::move(cis));
        out.trials.push_back(evaluationTrials);
    }
    return out;
}

/**
 * Pd over a (cos^2 phi, SCNR) grid; rows in lexicographic order with axes
 * (cos_sq_phi, scnr_db). SCNR is set along the true steering vector. The
 * clairvoyant benchmark assumes the nominal steering vector, so it is rejected here.
 */
inline CurveResult mismatchContour(const ScenarioConfig& cfgIn, double pfa, const std::vector<double>& scnrGridDb,
                                   const std::vector<double>& cosSqPhiGrid, const std::vector<DetectorSpec>& detectors,
                                   std::size_t calibrationTrials, std::size_t evaluationTrials,
                                   const HarnessOptions& opts = {}) {
    for (const auto& d : detectors)
        if (d.id == DetectorId::BENCHMARK) throw ValidationError("mismatchContour: BENCHMARK is not supported");
    ScenarioConfig base = cfgIn;
    base.cosSqPhi = 1.0;
    const Calibration cal = calibrate(base, detectors, pfa, calibrationTrials, opts);

    CurveResult out;
    out.axisNames = {"cos_sq_phi", "scnr_db"};
    out.detectors = detectors;
    std::size_t index = 0;
    for (double c : cosSqPhiGrid) {
        for (double scnr : scnrGridDb) {
            ScenarioConfig cfg = withSeed(base, SeedTag::Evaluation, index++);
            cfg.cosSqPhi = c;
            cfg.scnrDb = scnr;
            const TrialBlock block = runTrials(cfg, detectors, evaluationTrials, opts);
            out.axes.push_back({c, scnr});
            std::vector<double> rates, cis;
            for (const auto& d : detectors) {
                const RateEstimate r = estimateRate(block.column(d), cal.threshold(d));
                rates.push_back(r.rate);
                cis.push_back(r.ci);
            }
            out.rate.push_back(std::move(rates));
            out.ci.push_back(std::move(cis));
            out.trials.push_back(evaluationTrials);
        }
    }
    return out;
}

struct ConvergenceResult {
    std::optional<double> scnrDb;        ///< absent under H0
    std::vector<double> meanDeltaL;      ///< index l-1
    std::vector<double> meanMixtureLogLik;  ///< index l (state 0 first)
    std::size_t trials = 0;
};

/// Mean relative objective change per EM iteration over independent trials.
inline ConvergenceResult convergenceStudy(const ScenarioConfig& cfgIn, std::optional<double> scnrDb,
                                          std::size_t trials, int lMax, const HarnessOptions& opts = {}) {
    if (trials == 0) throw ValidationError("convergenceStudy: trials must be > 0");
    if (lMax < 1) throw ValidationError("convergenceStudy: lMax must be >= 1");
    ScenarioConfig cfg = withSeed(cfgIn, SeedTag::Convergence, scnrDb ? 1 : 0);
    cfg.scnrDb = scnrDb;
    cfg.cosSqPhi = 1.0;
    cfg.validate();
    const CholeskyFactor mFactor(buildCovariance(cfg));
    const ComplexVector v = steeringVector(cfg.n, cfg.dopplerNorm);
    const auto l = static_cast<std::size_t>(lMax);

    std::vector<std::vector<double>> dl(trials), ll(trials);
    detail::parallelFor(trials, opts.workers, [&](std::size_t t) {
        DataBatch batch = sampleBatch(cfg, mFactor, t);
        if (scnrDb) batch = injectTarget(std::move(batch), v, mFactor, *scnrDb, cfg.targetPhase);
        EmTrace tr = runEm(batch, v, sampleCovariance(batch), lMax, true);
        dl[t] = std::move(tr.deltaL);
        ll[t] = std::move(tr.mixtureLogLik);
    });

    ConvergenceResult out;
    out.scnrDb = scnrDb;
    out.trials = trials;
    out.meanDeltaL.assign(l, 0.0);
    out.meanMixtureLogLik.assign(l + 1, 0.0);
    // Summed in trial order so the result is independent of scheduling.
    for (std::size_t t = 0; t < trials; ++t) {
        for (std::size_t i = 0; i < l; ++i) out.meanDeltaL[i] += dl[t][i];
        for (std::size_t i = 0; i <= l; ++i) out.meanMixtureLogLik[i] += ll[t][i];
    }
    for (auto& x : out.meanDeltaL) x /= static_cast<double>(trials);
    for (auto& x : out.meanMixtureLogLik) x /= static_cast<double>(trials);
    return out;
}

} // namespace embml
