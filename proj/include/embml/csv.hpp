/**
 * @file csv.hpp
 * @brief CSV emission of curve, threshold and convergence results.
 *
 * Curve files: header of axis names followed by "<id>_rate,<id>_ci" per
 * detector in enumeration order; one row per grid point. Numbers use the
 * shortest decimal form that round-trips exactly.
 */
#pragma once

#include "embml/cube.hpp"
#include "embml/errors.hpp"
#include "embml/harness.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace embml {

inline std::string formatCurve(const CurveResult& r) {
    std::string out;
    for (std::size_t a = 0; a < r.axisNames.size(); ++a) {
        if (a) out += ',';
        out += r.axisNames[a];
    }
    for (const auto& d : r.detectors) {
        const std::string id = d.label();
        out += ',' + id + "_rate," + id + "_ci";
    }
    out += '\n';
    for (std::size_t row = 0; row < r.rows(); ++row) {
        for (std::size_t a = 0; a < r.axes[row].size(); ++a) {
            if (a) out += ',';
            out += detail::formatDouble(r.axes[row][a]);
        }
        for (std::size_t d = 0; d < r.detectors.size(); ++d) {
            out += ',' + detail::formatDouble(r.rate[row][d]);
            out += ',' + detail::formatDouble(r.ci[row][d]);
        }
        out += '\n';
    }
    return out;
}

inline void emitCurve(const CurveResult& r, const std::string& path) { detail::writeFile(path, formatCurve(r)); }

/// Parses formatCurve output. Trial counts are not part of the file and come back empty.
inline CurveResult parseCurve(std::string_view text) {
    CurveResult r;
    std::vector<std::string_view> lines;
    for (auto l : detail::splitLine(text, '\n')) {
        if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
        if (!l.empty()) lines.push_back(l);
    }
    if (lines.empty()) throw FormatError("curve csv: missing header");
    const auto header = detail::splitLine(lines[0], ',');
    std::size_t firstRate = header.size();
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i].ends_with("_rate")) {
            firstRate = i;
            break;
        }
    if ((header.size() - firstRate) % 2 != 0) throw FormatError("curve csv: unpaired rate/ci columns");
    for (std::size_t i = 0; i < firstRate; ++i) r.axisNames.emplace_back(header[i]);
    for (std::size_t i = firstRate; i < header.size(); i += 2) {
        std::string_view rateCol = header[i];
        rateCol.remove_suffix(5);
        const auto spec = parseDetectorLabel(rateCol);
        if (!spec || header[i + 1] != std::string(rateCol) + "_ci")
            throw FormatError("curve csv: bad detector columns '" + std::string(header[i]) + "'");
        r.detectors.push_back(*spec);
    }
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto toks = detail::splitLine(lines[li], ',');
        const std::string where = "curve csv line " + std::to_string(li + 1);
        if (toks.size() != header.size()) throw FormatError(where + ": wrong column count");
        std::vector<double> ax, rate, ci;
        for (std::size_t i = 0; i < firstRate; ++i) ax.push_back(detail::parseDouble(toks[i], where));
        for (std::size_t i = firstRate; i < toks.size(); i += 2) {
            rate.push_back(detail::parseDouble(toks[i], where));
            ci.push_back(detail::parseDouble(toks[i + 1], where));
        }
        r.axes.push_back(std::move(ax));
        r.rate.push_back(std::move(rate));
        r.ci.push_back(std::move(ci));
    }
    return r;
}

inline CurveResult readCurve(const std::string& path) { return parseCurve(detail::readFile(path)); }

/// "detector,pfa,threshold" rows.
inline void emitThresholds(const ThresholdTable& t, const std::string& path) {
    std::string out = "detector,pfa,threshold\n";
    for (const auto& e : t.entries)
        out += e.detector.label() + ',' + detail::formatDouble(e.pfa) + ',' + detail::formatDouble(e.threshold) + '\n';
    detail::writeFile(path, out);
}

/// "iteration,<series>..." with one mean-deltaL column per study (H0 or scnr_<dB>).
inline void emitConvergence(const std::vector<ConvergenceResult>& studies, const std::string& path) {
    std::string out = "iteration";
    std::size_t rows = 0;
    for (const auto& s : studies) {
        out += ',';
        out += s.scnrDb ? "scnr_" + detail::formatDouble(*s.scnrDb) : std::string("H0");
        rows = std::max(rows, s.meanDeltaL.size());
    }
    out += '\n';
    for (std::size_t l = 0; l < rows; ++l) {
        out += std::to_string(l + 1);
        for (const auto& s : studies) {
            out += ',';
            if (l < s.meanDeltaL.size()) out += detail::formatDouble(s.meanDeltaL[l]);
        }
        out += '\n';
    }
    detail::writeFile(path, out);
}

} // namespace embml
