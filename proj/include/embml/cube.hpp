/**
 * @file cube.hpp
 * @brief Recorded (pulse, range-bin) complex data cubes: file formats, a
 *        homogeneous synthetic generator, and the sliding-window detection run.
 *
 * Binary layout ("interleaved-binary"), little-endian:
 *   u64 pulseCount, u64 rangeBinCount,
 *   then pulseCount * rangeBinCount pairs of f64 (re, im), pulse-major.
 * CSV layout: one line per pulse, 2 * rangeBinCount comma-separated numbers
 *   re_0,im_0,re_1,im_1,...
 */
#pragma once

#include "embml/errors.hpp"
#include "embml/harness.hpp"
#include "embml/linalg.hpp"
#include "embml/rng.hpp"
#include "embml/scenario.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace embml {

enum class CubeFormat { InterleavedBinary, Csv };

inline std::string_view cubeFormatName(CubeFormat f) {
    return f == CubeFormat::Csv ? "csv" : "interleaved-binary";
}

inline std::optional<CubeFormat> parseCubeFormat(std::string_view s) {
    if (s == "csv") return CubeFormat::Csv;
    if (s == "interleaved-binary") return CubeFormat::InterleavedBinary;
    return std::nullopt;
}

struct DataCube {
    std::size_t pulseCount = 0;
    std::size_t rangeBinCount = 0;
    std::vector<Complex> samples;  ///< pulse-major
    std::string source;

    DataCube() = default;
    DataCube(std::size_t pulses, std::size_t bins, std::string label = {})
        : pulseCount(pulses), rangeBinCount(bins), samples(pulses * bins, Complex{0.0, 0.0}), source(std::move(label)) {}

    Complex& at(std::size_t pulse, std::size_t bin) { return samples[pulse * rangeBinCount + bin]; }
    Complex at(std::size_t pulse, std::size_t bin) const { return samples[pulse * rangeBinCount + bin]; }

    /// N consecutive pulses of one range bin.
    ComplexVector window(std::size_t firstPulse, std::size_t n, std::size_t bin) const {
        ComplexVector out(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = at(firstPulse + i, bin);
        return out;
    }

    bool operator==(const DataCube& o) const {
        return pulseCount == o.pulseCount && rangeBinCount == o.rangeBinCount && samples == o.samples;
    }
};

namespace detail {

inline void putU64(std::string& out, std::uint64_t x) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xFF));
}

inline std::uint64_t getU64(std::string_view in, std::size_t offset) {
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
    return x;
}

inline std::string readFile(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed on '" + path + "'");
    return data;
}

inline void writeFile(const std::string& path, std::string_view data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw IoError("write failed on '" + path + "'");
}

inline double parseDouble(std::string_view tok, const std::string& where) {
    while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
    while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t' || tok.back() == '\r')) tok.remove_suffix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
        throw FormatError(where + ": cannot parse number '" + std::string(tok) + "'");
    return v;
}

inline std::vector<std::string_view> splitLine(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::string formatDouble(double x) {
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return std::string(buf.data(), ptr);
}

} // namespace detail

inline void writeCube(const DataCube& cube, const std::string& path, CubeFormat format) {
    if (cube.samples.size() != cube.pulseCount * cube.rangeBinCount)
        throw FormatError("writeCube: sample count does not match dimensions");
    for (const auto& s : cube.samples)
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) throw FormatError("writeCube: non-finite sample");
    std::string out;
    if (format == CubeFormat::InterleavedBinary) {
        out.reserve(16 + cube.samples.size() * 16);
        detail::putU64(out, cube.pulseCount);
        detail::putU64(out, cube.rangeBinCount);
        for (const auto& s : cube.samples) {
            detail::putU64(out, std::bit_cast<std::uint64_t>(s.real()));
            detail::putU64(out, std::bit_cast<std::uint64_t>(s.imag()));
        }
    } else {
        for (std::size_t p = 0; p < cube.pulseCount; ++p) {
            for (std::size_t b = 0; b < cube.rangeBinCount; ++b) {
                if (b) out += ',';
                out += detail::formatDouble(cube.at(p, b).real());
                out += ',';
                out += detail::formatDouble(cube.at(p, b).imag());
            }
            out += '\n';
        }
    }
    detail::writeFile(path, out);
}

inline DataCube ingestCube(const std::string& path, CubeFormat format) {
    const std::string data = detail::readFile(path);
    DataCube cube;
    cube.source = path;
    if (format == CubeFormat::InterleavedBinary) {
        if (data.size() < 16) throw FormatError(path + ": truncated header");
        const std::uint64_t pulses = detail::getU64(data, 0);
        const std::uint64_t bins = detail::getU64(data, 8);
        if (pulses == 0 || bins == 0) throw FormatError(path + ": zero dimension in header");
        if (bins > (std::numeric_limits<std::uint64_t>::max() / 16) / pulses ||
            data.size() - 16 != pulses * bins * 16)
            throw FormatError(path + ": header dims " + std::to_string(pulses) + "x" + std::to_string(bins) +
                              " inconsistent with payload of " + std::to_string(data.size() - 16) + " bytes");
        cube.pulseCount = pulses;
        cube.rangeBinCount = bins;
        cube.samples.resize(pulses * bins);
        for (std::size_t i = 0; i < cube.samples.size(); ++i) {
            const double re = std::bit_cast<double>(detail::getU64(data, 16 + 16 * i));
            const double im = std::bit_cast<double>(detail::getU64(data, 24 + 16 * i));
            cube.samples[i] = Complex{re, im};
        }
    } else {
        std::size_t lineNo = 0;
        std::size_t start = 0;
        while (start < data.size()) {
            std::size_t end = data.find('\n', start);
            if (end == std::string::npos) end = data.size();
            std::string_view line(data.data() + start, end - start);
            start = end + 1;
            ++lineNo;
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            if (line.empty()) continue;
            const auto toks = detail::splitLine(line, ',');
            if (toks.size() % 2 != 0)
                throw FormatError(path + ":" + std::to_string(lineNo) + ": odd number of values");
            const std::size_t bins = toks.size() / 2;
            if (cube.pulseCount == 0) cube.rangeBinCount = bins;
            if (bins != cube.rangeBinCount)
                throw FormatError(path + ":" + std::to_string(lineNo) + ": expected " +
                                  std::to_string(cube.rangeBinCount) + " cells, found " + std::to_string(bins));
            const std::string where = path + ":" + std::to_string(lineNo);
            for (std::size_t b = 0; b < bins; ++b)
                cube.samples.emplace_back(detail::parseDouble(toks[2 * b], where),
                                          detail::parseDouble(toks[2 * b + 1], where));
            ++cube.pulseCount;
        }
        if (cube.pulseCount == 0) throw FormatError(path + ": empty cube");
    }
    if (!allFinite(cube.samples)) throw FormatError(path + ": non-finite sample");
    return cube;
}

/**
 * Homogeneous cube whose every run of N consecutive pulses in a bin is
 * CN(0, sigma^2 I + sigma_c^2 [rho^|i-j|]): per bin, an AR(1) clutter sequence
 * with unit power plus white noise. Bins are independent.
 */
inline DataCube synthesizeCube(const ScenarioConfig& cfg, std::size_t pulses, std::size_t bins) {
    cfg.validate();
    DataCube cube(pulses, bins, "synthetic");
    const double clutterAmp = std::sqrt(cfg.noisePower * std::pow(10.0, cfg.cnrDb / 10.0));
    const double noiseAmp = std::sqrt(cfg.noisePower);
    const double innovation = std::sqrt(1.0 - cfg.rho * cfg.rho);
    for (std::size_t b = 0; b < bins; ++b) {
        CounterRng rng(streamKey(cfg.masterSeed, b, 0));
        std::normal_distribution<double> normal(0.0, std::numbers::sqrt2 / 2.0);
        auto cn = [&] {
            const double re = normal(rng);
            const double im = normal(rng);
            return Complex{re, im};
        };
        Complex clutter = cn();
        for (std::size_t p = 0; p < pulses; ++p) {
            if (p > 0) clutter = cfg.rho * clutter + innovation * cn();
            cube.at(p, b) = clutterAmp * clutter + noiseAmp * cn();
        }
    }
    return cube;
}

struct SlidingWindowSettings {
    std::size_t n = 8;
    std::size_t k = 16;
    std::size_t overlap = 5;      ///< pulses shared by consecutive windows
    std::size_t cutBin = 28;      ///< threshold-estimation bin
    std::size_t evalBin = 66;     ///< Pfa / Pd evaluation bin
    double pfa = 1e-2;
    double dopplerNorm = 0.1;
    double targetPhase = 0.0;
    std::vector<double> scnrGridDb;
    std::vector<DetectorSpec> detectors;
};

/// Number of N-pulse windows with the given overlap.
inline std::size_t windowCount(std::size_t pulses, std::size_t n, std::size_t overlap) {
    if (overlap >= n) throw ValidationError("sliding window: overlap must be < N");
    if (pulses < n) return 0;
    return (pulses - n) / (n - overlap) + 1;
}

/// Window `w` of range bin `cut`: CUT vector plus K/2 secondary bins on each side (no guard cells).
inline DataBatch windowBatch(const DataCube& cube, const SlidingWindowSettings& s, std::size_t w, std::size_t cut) {
    const std::size_t first = w * (s.n - s.overlap);
    DataBatch b;
    b.cut = cube.window(first, s.n, cut);
    const std::size_t left = s.k / 2;
    const std::size_t right = s.k - left;
    for (std::size_t j = cut - left; j < cut; ++j) b.secondary.push_back(cube.window(first, s.n, j));
    for (std::size_t j = cut + 1; j <= cut + right; ++j) b.secondary.push_back(cube.window(first, s.n, j));
    return b;
}

/**
 * Thresholds from the null statistics of `cutBin`, then empirical Pfa on both
 * bins and Pd on `evalBin` with targets injected at each SCNR. The SCNR uses
 * the evaluation region's sample covariance (averaged over all windows) as M.
 *
 * Rows: (cutBin, -inf) and (evalBin, -inf) carry Pfa; (evalBin, scnr) carry Pd.
 */
inline CurveResult slidingWindowRun(const DataCube& cube, const SlidingWindowSettings& s,
                                    const HarnessOptions& opts = {}) {
    if (s.n < 2 || s.k < s.n) throw ValidationError("sliding window: need N >= 2 and K >= N");
    for (const auto& d : s.detectors)
        if (d.id == DetectorId::BENCHMARK) throw ValidationError("sliding window: BENCHMARK needs the true covariance");
    const std::size_t left = s.k / 2;
    const std::size_t right = s.k - left;
    for (std::size_t bin : {s.cutBin, s.evalBin})
        if (bin < left || bin + right >= cube.rangeBinCount)
            throw InsufficientData("sliding window: bin " + std::to_string(bin) + " lacks " + std::to_string(left) +
                                   "+" + std::to_string(right) + " neighbouring bins in a " +
                                   std::to_string(cube.rangeBinCount) + "-bin cube");
    const std::size_t windows = windowCount(cube.pulseCount, s.n, s.overlap);
    if (windows == 0)
        throw InsufficientData("sliding window: " + std::to_string(cube.pulseCount) + " pulses < N = " +
                               std::to_string(s.n));

    const ComplexVector v = steeringVector(s.n, s.dopplerNorm);
    const int emMax = maxEmIterations(s.detectors);
    const std::size_t nd = s.detectors.size();

    auto statsFor = [&](std::size_t bin, std::optional<Complex> alpha, const ComplexVector& vTrue) {
        std::vector<std::vector<double>> cols(nd, std::vector<double>(windows));
        detail::parallelFor(windows, opts.workers, [&](std::size_t w) {
            DataBatch b = windowBatch(cube, s, w, bin);
            if (alpha)
                for (std::size_t i = 0; i < s.n; ++i) b.cut[i] += *alpha * vTrue[i];
            const auto vals = adaptiveStatistics(b, v, s.detectors, emMax);
            for (std::size_t d = 0; d < nd; ++d) cols[d][w] = vals[d];
        });
        return cols;
    };

    const auto calCols = statsFor(s.cutBin, std::nullopt, v);
    std::vector<double> thresholds(nd);
    for (std::size_t d = 0; d < nd; ++d)
        thresholds[d] = calibrateThreshold(TrialEnsemble(s.detectors[d], calCols[d], {}), s.pfa);

    HermitianMatrix region(s.n);
    for (std::size_t w = 0; w < windows; ++w)
        for (const auto& zk : windowBatch(cube, s, w, s.evalBin).secondary)
            region = rankOneUpdate(std::move(region), 1.0 / static_cast<double>(windows * s.k), zk);
    const CholeskyFactor regionFactor(region);

    CurveResult out;
    out.axisNames = {"range_bin", "scnr_db"};
    out.detectors = s.detectors;
    auto addRow = [&](double bin, double scnr, const std::vector<std::vector<double>>& cols) {
        out.axes.push_back({bin, scnr});
        std::vector<double> rates, cis;
        for (std::size_t d = 0; d < nd; ++d) {
            const RateEstimate r = estimateRate(cols[d], thresholds[d]);
            rates.push_back(r.rate);
            cis.push_back(r.ci);
        }
        out.rate.push_back(std::move(rates));
        out.ci.push_back(std::move(cis));
        out.trials.push_back(windows);
    };
    const double noTarget = -std::numeric_limits<double>::infinity();
    addRow(static_cast<double>(s.cutBin), noTarget, calCols);
    addRow(static_cast<double>(s.evalBin), noTarget, statsFor(s.evalBin, std::nullopt, v));
    for (double scnr : s.scnrGridDb)
        addRow(static_cast<double>(s.evalBin), scnr,
               statsFor(s.evalBin, targetAmplitude(v, regionFactor, scnr, s.targetPhase), v));
    return out;
}

} // namespace embml
