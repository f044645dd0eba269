#include "embml/embml.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <map>
#include <thread>

using namespace embml;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;

struct Overrides {
    std::string config;
    std::uint64_t seed = 0;
    std::size_t workers = 0;
    std::string out;
    double pfa = 0.0;
    std::vector<std::string> detectors;
    std::vector<int> lMax;
    std::vector<double> scnr, cnr, rho, cosSqPhi, convergenceScnr;
    std::size_t calibrationTrials = 0, evaluationTrials = 0, convergenceTrials = 0;
    std::size_t n = 0, k = 0;
    std::string cube, format;
    std::size_t cutBin = 0, evalBin = 0, overlap = 0;
    std::size_t pulses = 30720, bins = 76;

    std::map<std::string, std::vector<CLI::Option*>> given;

    bool has(const std::string& name) const {
        auto it = given.find(name);
        if (it == given.end()) return false;
        return std::any_of(it->second.begin(), it->second.end(), [](CLI::Option* opt) { return opt->count() > 0; });
    }
};

void addCommon(CLI::App* sub, Overrides& o) {
    auto& g = o.given;
    g["config"].push_back(sub->add_option("--config", o.config, "JSON experiment configuration"));
    g["seed"].push_back(sub->add_option("--seed", o.seed, "master seed"));
    g["workers"].push_back(sub->add_option("--workers", o.workers, "worker threads (default: hardware concurrency)"));
    g["out"].push_back(sub->add_option("--out", o.out, "output CSV path"));
    g["pfa"].push_back(sub->add_option("--pfa", o.pfa, "nominal false-alarm probability"));
    g["detectors"].push_back(sub->add_option("--detectors", o.detectors, "detector names (GLRT AMF RAO ACE BENCHMARK EM_BML_D)"));
    g["l-max"].push_back(sub->add_option("--l-max", o.lMax, "EM iteration counts"));
    g["n"].push_back(sub->add_option("--n", o.n, "channels N"));
    g["k"].push_back(sub->add_option("--k", o.k, "secondary vectors K"));
    g["calibration-trials"].push_back(sub->add_option("--calibration-trials", o.calibrationTrials, "null trials for thresholds"));
    g["evaluation-trials"].push_back(sub->add_option("--evaluation-trials", o.evaluationTrials, "trials per grid point"));
}

void addScnrGrid(CLI::App* sub, Overrides& o) {
    o.given["scnr"].push_back(sub->add_option("--scnr", o.scnr, "SCNR grid in dB"));
}

std::string defaultOut(const ExperimentSpec& spec) {
    return std::string(commandName(spec.command)) + ".csv";
}

ExperimentSpec buildSpec(Command command, const Overrides& o) {
    ExperimentSpec spec;
    if (o.has("config")) spec = parseConfig(detail::readFile(o.config));
    const bool outInConfig = o.has("config") && spec.output != ExperimentSpec{}.output;
    spec.command = command;
    if (o.has("seed")) spec.scenario.masterSeed = o.seed;
    if (o.has("pfa")) spec.pfa = o.pfa;
    if (o.has("detectors")) {
        spec.detectors.clear();
        for (const auto& name : o.detectors) {
            const auto id = parseDetectorId(name);
            if (!id) throw ValidationError("unknown detector '" + name + "'");
            spec.detectors.push_back(*id);
        }
    }
    if (o.has("l-max")) spec.lMax = o.lMax;
    if (o.has("n")) spec.scenario.n = o.n;
    if (o.has("k")) spec.scenario.k = o.k;
    if (o.has("scnr")) spec.scnrGridDb = o.scnr;
    if (o.has("cnr")) spec.cnrGridDb = o.cnr;
    if (o.has("rho")) spec.rhoGrid = o.rho;
    if (o.has("cos-sq-phi")) spec.cosSqPhiGrid = o.cosSqPhi;
    if (o.has("convergence-scnr")) spec.convergenceScnrDb = o.convergenceScnr;
    if (o.has("calibration-trials")) spec.calibrationTrials = o.calibrationTrials;
    if (o.has("evaluation-trials")) spec.evaluationTrials = o.evaluationTrials;
    if (o.has("convergence-trials")) spec.convergenceTrials = o.convergenceTrials;
    if (o.has("cube")) spec.ingest.cubePath = o.cube;
    if (o.has("format")) {
        const auto f = parseCubeFormat(o.format);
        if (!f) throw ValidationError("unknown cube format '" + o.format + "'");
        spec.ingest.format = *f;
    }
    if (o.has("cut-bin")) spec.ingest.cutBin = o.cutBin;
    if (o.has("eval-bin")) spec.ingest.evalBin = o.evalBin;
    if (o.has("overlap")) spec.ingest.overlap = o.overlap;
    if (o.has("out"))
        spec.output = o.out;
    else if (!outInConfig)
        spec.output = defaultOut(spec);
    spec.validate();
    return spec;
}

std::vector<DetectorSpec> withoutBenchmark(std::vector<DetectorSpec> d) {
    std::erase_if(d, [](const DetectorSpec& s) { return s.id == DetectorId::BENCHMARK; });
    if (d.empty()) throw ValidationError("no detectors left after removing BENCHMARK");
    return d;
}

void run(const ExperimentSpec& spec, const HarnessOptions& opts) {
    const auto detectors = expandDetectors(spec.detectors, spec.lMax);
    const ScenarioConfig& cfg = spec.scenario;
    switch (spec.command) {
        case Command::Calibrate: {
            const Calibration cal = calibrate(cfg, withoutBenchmark(detectors), spec.pfa, spec.calibrationTrials, opts);
            emitThresholds(cal.table, spec.output);
            break;
        }
        case Command::PfaSweep:
            emitCurve(cfarSweep(cfg, spec.pfa, spec.cnrGridDb, spec.rhoGrid, withoutBenchmark(detectors),
                                spec.calibrationTrials, spec.evaluationTrials, opts),
                      spec.output);
            break;
        case Command::PdCurve:
            emitCurve(pdCurve(cfg, spec.pfa, spec.scnrGridDb, detectors, spec.calibrationTrials,
                              spec.evaluationTrials, opts),
                      spec.output);
            break;
        case Command::MismatchContour:
            emitCurve(mismatchContour(cfg, spec.pfa, spec.scnrGridDb, spec.cosSqPhiGrid, withoutBenchmark(detectors),
                                      spec.calibrationTrials, spec.evaluationTrials, opts),
                      spec.output);
            break;
        case Command::Convergence: {
            const int lMax = *std::max_element(spec.lMax.begin(), spec.lMax.end());
            std::vector<ConvergenceResult> studies{convergenceStudy(cfg, std::nullopt, spec.convergenceTrials, lMax, opts)};
            for (double s : spec.convergenceScnrDb)
                studies.push_back(convergenceStudy(cfg, s, spec.convergenceTrials, lMax, opts));
            emitConvergence(studies, spec.output);
            break;
        }
        case Command::IngestRun: {
            const DataCube cube = ingestCube(spec.ingest.cubePath, spec.ingest.format);
            SlidingWindowSettings s;
            s.n = cfg.n;
            s.k = cfg.k;
            s.overlap = spec.ingest.overlap;
            s.cutBin = spec.ingest.cutBin;
            s.evalBin = spec.ingest.evalBin;
            s.pfa = spec.pfa;
            s.dopplerNorm = cfg.dopplerNorm;
            s.targetPhase = cfg.targetPhase;
            s.scnrGridDb = spec.scnrGridDb;
            s.detectors = withoutBenchmark(detectors);
            emitCurve(slidingWindowRun(cube, s, opts), spec.output);
            break;
        }
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"EM-based Bayesian/ML adaptive radar detection experiments"};
    app.require_subcommand(1);
    Overrides o;

    auto* calib = app.add_subcommand("calibrate", "per-detector thresholds from null trials");
    auto* sweep = app.add_subcommand("pfa-sweep", "empirical Pfa over CNR and rho grids");
    auto* pd = app.add_subcommand("pd-curve", "Pd versus SCNR for matched targets");
    auto* contour = app.add_subcommand("mismatch-contour", "Pd over (cos^2 phi, SCNR) for mismatched targets");
    auto* conv = app.add_subcommand("convergence", "mean relative objective change per EM iteration");
    auto* ingest = app.add_subcommand("ingest-run", "sliding-window Pfa/Pd on a recorded range-pulse cube");
    auto* synth = app.add_subcommand("synth-cube", "write a homogeneous synthetic cube");

    for (auto* sub : {calib, sweep, pd, contour, conv, ingest, synth}) addCommon(sub, o);
    for (auto* sub : {pd, contour, ingest}) addScnrGrid(sub, o);
    o.given["cnr"].push_back(sweep->add_option("--cnr", o.cnr, "CNR grid in dB"));
    o.given["rho"].push_back(sweep->add_option("--rho", o.rho, "one-lag correlation grid"));
    o.given["cos-sq-phi"].push_back(contour->add_option("--cos-sq-phi", o.cosSqPhi, "mismatch grid"));
    o.given["convergence-scnr"].push_back(conv->add_option("--scnr", o.convergenceScnr, "H1 SCNR series in dB (H0 always runs)"));
    o.given["convergence-trials"].push_back(conv->add_option("--trials", o.convergenceTrials, "trials per series"));
    for (auto* sub : {ingest, synth}) {
        o.given["format"].push_back(sub->add_option("--format", o.format, "interleaved-binary or csv"));
    }
    o.given["cube"].push_back(ingest->add_option("--cube", o.cube, "cube file"));
    o.given["cut-bin"].push_back(ingest->add_option("--cut-bin", o.cutBin, "threshold-estimation range bin"));
    o.given["eval-bin"].push_back(ingest->add_option("--eval-bin", o.evalBin, "evaluation range bin"));
    o.given["overlap"].push_back(ingest->add_option("--overlap", o.overlap, "pulses shared by consecutive windows"));
    synth->add_option("--pulses", o.pulses, "pulse count");
    synth->add_option("--bins", o.bins, "range-bin count");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        const HarnessOptions opts{o.has("workers") && o.workers > 0
                                      ? o.workers
                                      : std::max<std::size_t>(1, std::thread::hardware_concurrency())};
        if (synth->parsed()) {
            ExperimentSpec spec = buildSpec(Command::PdCurve, o);
            const auto format = o.has("format") ? spec.ingest.format : CubeFormat::InterleavedBinary;
            const std::string path = o.has("out") ? o.out : std::string("cube.bin");
            writeCube(synthesizeCube(spec.scenario, o.pulses, o.bins), path, format);
            std::cout << path << "\n";
            return 0;
        }
        Command command = Command::Calibrate;
        const std::pair<CLI::App*, Command> subs[] = {{calib, Command::Calibrate},
                                                      {sweep, Command::PfaSweep},
                                                      {pd, Command::PdCurve},
                                                      {contour, Command::MismatchContour},
                                                      {conv, Command::Convergence},
                                                      {ingest, Command::IngestRun}};
        for (const auto& [sub, cmd] : subs)
            if (sub->parsed()) command = cmd;
        const ExperimentSpec spec = buildSpec(command, o);
        run(spec, opts);
        std::cout << spec.output << "\n";
        return 0;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
}
