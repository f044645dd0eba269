/**
 * @file config.hpp
 * @brief Experiment configuration: JSON text <-> ExperimentSpec, with defaults
 *        and validation.
 *
 * Example:
 * @code{.json}
 * {
 *   "command": "pd-curve",
 *   "scenario": {"n": 8, "k": 16, "rho": 0.9, "cnr_db": 30, "seed": 7},
 *   "detectors": ["GLRT", "AMF", "EM-BML-D"],
 *   "l_max": [5, 7],
 *   "pfa": 0.001,
 *   "grids": {"scnr_db": [0, 5, 10, 15, 20]},
 *   "trials": {"calibration": 100000, "evaluation": 10000},
 *   "output": "pd.csv"
 * }
 * @endcode
 * Every key is optional; unknown keys are rejected.
 */
#pragma once

#include "embml/cube.hpp"
#include "embml/detectors.hpp"
#include "embml/errors.hpp"
#include "embml/scenario.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <type_traits>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace embml {

enum class Command { Calibrate, PfaSweep, PdCurve, MismatchContour, Convergence, IngestRun };

inline constexpr std::array<std::pair<Command, std::string_view>, 6> kCommandNames = {{
    {Command::Calibrate, "calibrate"},
    {Command::PfaSweep, "pfa-sweep"},
    {Command::PdCurve, "pd-curve"},
    {Command::MismatchContour, "mismatch-contour"},
    {Command::Convergence, "convergence"},
    {Command::IngestRun, "ingest-run"},
}};

inline std::string_view commandName(Command c) {
    for (const auto& [cmd, name] : kCommandNames)
        if (cmd == c) return name;
    return "?";
}

inline std::optional<Command> parseCommand(std::string_view s) {
    for (const auto& [cmd, name] : kCommandNames)
        if (name == s) return cmd;
    return std::nullopt;
}

/// Commands that calibrate thresholds on synthetic null trials.
inline bool calibratesThresholds(Command c) {
    return c == Command::Calibrate || c == Command::PfaSweep || c == Command::PdCurve ||
           c == Command::MismatchContour;
}

struct IngestSettings {
    std::string cubePath;
    CubeFormat format = CubeFormat::InterleavedBinary;
    std::size_t cutBin = 28;
    std::size_t evalBin = 66;
    std::size_t overlap = 5;

    bool operator==(const IngestSettings&) const = default;
};

struct ExperimentSpec {
    Command command = Command::PdCurve;
    ScenarioConfig scenario;
    std::vector<DetectorId> detectors{kAllDetectorIds.begin(), kAllDetectorIds.end()};
    std::vector<int> lMax{5};
    double pfa = 1e-3;
    std::vector<double> scnrGridDb{0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30};
    std::vector<double> cnrGridDb{30, 50, 70, 90, 110};
    std::vector<double> rhoGrid{0.5, 0.6, 0.7, 0.8, 0.9};
    std::vector<double> cosSqPhiGrid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::vector<double> convergenceScnrDb;  ///< H1 series for the convergence command (H0 always runs)
    std::size_t calibrationTrials = 100000;
    std::size_t evaluationTrials = 10000;
    std::size_t convergenceTrials = 1000;
    std::string output = "result.csv";
    IngestSettings ingest;

    bool operator==(const ExperimentSpec&) const = default;

    void validate() const {
        scenario.validate();
        if (!(pfa > 0.0 && pfa < 0.5)) throw ValidationError("pfa must lie in (0, 0.5)");
        if (detectors.empty()) throw ValidationError("detector list is empty");
        if (lMax.empty()) throw ValidationError("l_max list is empty");
        for (int l : lMax)
            if (l < 0) throw ValidationError("l_max entries must be >= 0");
        auto nonEmpty = [](const std::vector<double>& g, const char* name) {
            if (g.empty()) throw ValidationError(std::string("grid '") + name + "' is empty");
        };
        nonEmpty(scnrGridDb, "scnr_db");
        nonEmpty(cnrGridDb, "cnr_db");
        nonEmpty(rhoGrid, "rho");
        nonEmpty(cosSqPhiGrid, "cos_sq_phi");
        for (double r : rhoGrid)
            if (!(r >= 0.0 && r < 1.0)) throw ValidationError("rho grid values must lie in [0, 1)");
        for (double c : cosSqPhiGrid)
            if (!(c >= 0.0 && c <= 1.0)) throw ValidationError("cos_sq_phi grid values must lie in [0, 1]");
        if (calibratesThresholds(command) && static_cast<double>(calibrationTrials) * pfa < 100.0 - 1e-9)
            throw ValidationError("calibration trials " + std::to_string(calibrationTrials) + " < 100/pfa");
        if (evaluationTrials == 0) throw ValidationError("evaluation trials must be > 0");
        if (command == Command::Convergence && convergenceTrials == 0)
            throw ValidationError("convergence trials must be > 0");
        if (command == Command::IngestRun) {
            if (ingest.cubePath.empty()) throw ValidationError("ingest-run needs ingest.cube");
            if (ingest.overlap >= scenario.n) throw ValidationError("ingest.overlap must be < N");
        }
    }
};

namespace detail {

using Json = nlohmann::json;

inline std::size_t lineOfOffset(std::string_view text, std::size_t byte) {
    byte = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

/// Reads a JSON object, rejecting keys outside `allowed`.
class ObjectReader {
public:
    ObjectReader(const Json& obj, std::string path, std::set<std::string> allowed) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) throw ParseError(path_ + ": expected an object", 0, path_);
        for (const auto& [key, value] : obj_.items())
            if (!allowed.contains(key)) throw ParseError("unknown field '" + field(key) + "'", 0, field(key));
    }

    template <class T>
    void get(const char* key, T& out) const {
        if (!obj_.contains(key)) return;
        if constexpr (std::is_unsigned_v<T>) {
            if (!obj_.at(key).is_number_unsigned())
                throw ParseError("field '" + field(key) + "': expected a non-negative integer", 0, field(key));
        }
        try {
            out = obj_.at(key).get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("field '" + field(key) + "': " + e.what(), 0, field(key));
        }
    }

    const Json* child(const char* key) const { return obj_.contains(key) ? &obj_.at(key) : nullptr; }
    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    const Json& obj_;
    std::string path_;
};

} // namespace detail

/// Parses configuration text, applies defaults and validates.
inline ExperimentSpec parseConfig(std::string_view text) {
    using detail::Json;
    ExperimentSpec spec;
    const bool blank = std::all_of(text.begin(), text.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
    if (blank) {
        spec.validate();
        return spec;
    }
    Json root;
    try {
        root = Json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("line ") + std::to_string(detail::lineOfOffset(text, e.byte)) + ": " + e.what(),
                         detail::lineOfOffset(text, e.byte));
    }

    const detail::ObjectReader top(root, "", {"command", "scenario", "detectors", "l_max", "pfa", "grids", "trials",
                                              "output", "ingest"});
    std::string command(commandName(spec.command));
    top.get("command", command);
    if (auto c = parseCommand(command)) {
        spec.command = *c;
    } else {
        throw ParseError("field 'command': unknown command '" + command + "'", 0, "command");
    }

    if (const Json* s = top.child("scenario")) {
        const detail::ObjectReader r(*s, "scenario", {"n", "k", "rho", "cnr_db", "noise_power", "doppler", "scnr_db",
                                                      "cos_sq_phi", "target_phase", "seed"});
        auto& sc = spec.scenario;
        r.get("n", sc.n);
        r.get("k", sc.k);
        r.get("rho", sc.rho);
        r.get("cnr_db", sc.cnrDb);
        r.get("noise_power", sc.noisePower);
        r.get("doppler", sc.dopplerNorm);
        if (const Json* scnr = r.child("scnr_db"); scnr && !scnr->is_null()) {
            double x = 0.0;
            r.get("scnr_db", x);
            sc.scnrDb = x;
        }
        r.get("cos_sq_phi", sc.cosSqPhi);
        r.get("target_phase", sc.targetPhase);
        r.get("seed", sc.masterSeed);
    }

    if (top.child("detectors")) {
        std::vector<std::string> names;
        top.get("detectors", names);
        spec.detectors.clear();
        for (const auto& n : names) {
            const auto id = parseDetectorId(n);
            if (!id) throw ParseError("field 'detectors': unknown detector '" + n + "'", 0, "detectors");
            spec.detectors.push_back(*id);
        }
    }
    top.get("l_max", spec.lMax);
    top.get("pfa", spec.pfa);
    top.get("output", spec.output);

    if (const Json* g = top.child("grids")) {
        const detail::ObjectReader r(*g, "grids", {"scnr_db", "cnr_db", "rho", "cos_sq_phi", "convergence_scnr_db"});
        r.get("scnr_db", spec.scnrGridDb);
        r.get("cnr_db", spec.cnrGridDb);
        r.get("rho", spec.rhoGrid);
        r.get("cos_sq_phi", spec.cosSqPhiGrid);
        r.get("convergence_scnr_db", spec.convergenceScnrDb);
    }
    if (const Json* t = top.child("trials")) {
        const detail::ObjectReader r(*t, "trials", {"calibration", "evaluation", "convergence"});
        r.get("calibration", spec.calibrationTrials);
        r.get("evaluation", spec.evaluationTrials);
        r.get("convergence", spec.convergenceTrials);
    }
    if (const Json* in = top.child("ingest")) {
        const detail::ObjectReader r(*in, "ingest", {"cube", "format", "cut_bin", "eval_bin", "overlap"});
        r.get("cube", spec.ingest.cubePath);
        std::string fmt(cubeFormatName(spec.ingest.format));
        r.get("format", fmt);
        const auto f = parseCubeFormat(fmt);
        if (!f) throw ParseError("field 'ingest.format': unknown cube format '" + fmt + "'", 0, "ingest.format");
        spec.ingest.format = *f;
        r.get("cut_bin", spec.ingest.cutBin);
        r.get("eval_bin", spec.ingest.evalBin);
        r.get("overlap", spec.ingest.overlap);
    }

    spec.validate();
    return spec;
}

/// Full JSON rendering of a spec; parseConfig(serializeConfig(s)) == s.
inline std::string serializeConfig(const ExperimentSpec& spec) {
    using detail::Json;
    Json root;
    root["command"] = commandName(spec.command);
    const auto& sc = spec.scenario;
    root["scenario"] = {{"n", sc.n},
                        {"k", sc.k},
                        {"rho", sc.rho},
                        {"cnr_db", sc.cnrDb},
                        {"noise_power", sc.noisePower},
                        {"doppler", sc.dopplerNorm},
                        {"scnr_db", sc.scnrDb ? Json(*sc.scnrDb) : Json(nullptr)},
                        {"cos_sq_phi", sc.cosSqPhi},
                        {"target_phase", sc.targetPhase},
                        {"seed", sc.masterSeed}};
    Json dets = Json::array();
    for (DetectorId id : spec.detectors) dets.push_back(detectorName(id));
    root["detectors"] = dets;
    root["l_max"] = spec.lMax;
    root["pfa"] = spec.pfa;
    root["grids"] = {{"scnr_db", spec.scnrGridDb},
                     {"cnr_db", spec.cnrGridDb},
                     {"rho", spec.rhoGrid},
                     {"cos_sq_phi", spec.cosSqPhiGrid},
                     {"convergence_scnr_db", spec.convergenceScnrDb}};
    root["trials"] = {{"calibration", spec.calibrationTrials},
                      {"evaluation", spec.evaluationTrials},
                      {"convergence", spec.convergenceTrials}};
    root["output"] = spec.output;
    root["ingest"] = {{"cube", spec.ingest.cubePath},
                      {"format", cubeFormatName(spec.ingest.format)},
                      {"cut_bin", spec.ingest.cutBin},
                      {"eval_bin", spec.ingest.evalBin},
                      {"overlap", spec.ingest.overlap}};
    return root.dump(2) + "\n";
}

} // namespace embml
