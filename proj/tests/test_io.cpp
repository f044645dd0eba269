#include "embml/embml.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

using namespace embml;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
protected:
    fs::path dir;
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("embml_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
    std::string path(const char* name) const { return (dir / name).string(); }
};

using CurveIo = TempDir;
using CubeIo = TempDir;

std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

DataCube randomCube(std::size_t pulses, std::size_t bins, std::uint64_t seed) {
    DataCube c(pulses, bins, "random");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 3.0);
    for (auto& x : c.samples) x = {g(rng), g(rng)};
    return c;
}

} // namespace

TEST_F(CurveIo, SinglePointGivesTwoLines) {
    CurveResult r;
    r.axisNames = {"scnr_db"};
    r.detectors = {{DetectorId::GLRT, 0}, {DetectorId::EM_BML_D, 5}};
    r.axes = {{15.0}};
    r.rate = {{0.6, 0.1}};
    r.ci = {{0.0096, 0.00588}};
    emitCurve(r, path("one.csv"));
    EXPECT_EQ(slurp(path("one.csv")), "scnr_db,GLRT_rate,GLRT_ci,EM_BML_D5_rate,EM_BML_D5_ci\n15,0.6,0.0096,0.1,0.00588\n");
}

TEST_F(CurveIo, RoundTripIsExactAndDeterministic) {
    CurveResult r;
    r.axisNames = {"cos_sq_phi", "scnr_db"};
    r.detectors = {{DetectorId::GLRT, 0}, {DetectorId::AMF, 0}, {DetectorId::ACE, 0}, {DetectorId::EM_BML_D, 7}};
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double c : {0.0, 0.1, 1.0 / 3.0})
        for (double s : {-std::numeric_limits<double>::infinity(), 0.1, 25.0}) {
            r.axes.push_back({c, s});
            std::vector<double> rate, ci;
            for (std::size_t d = 0; d < 4; ++d) {
                rate.push_back(u(rng));
                ci.push_back(binomialHalfWidth(rate.back(), 1000));
            }
            r.rate.push_back(rate);
            r.ci.push_back(ci);
        }
    emitCurve(r, path("c.csv"));
    const CurveResult back = readCurve(path("c.csv"));
    EXPECT_EQ(back.axisNames, r.axisNames);
    EXPECT_EQ(back.detectors, r.detectors);
    EXPECT_EQ(back.axes, r.axes);
    EXPECT_EQ(back.rate, r.rate);
    EXPECT_EQ(back.ci, r.ci);
    emitCurve(back, path("d.csv"));
    EXPECT_EQ(slurp(path("c.csv")), slurp(path("d.csv")));
}

TEST_F(CurveIo, MalformedCurveIsRejected) {
    EXPECT_THROW((void)parseCurve(""), FormatError);
    EXPECT_THROW((void)parseCurve("scnr_db,GLRT_rate\n1,0.5\n"), FormatError);
    EXPECT_THROW((void)parseCurve("scnr_db,GLRT_rate,GLRT_ci\n1,0.5\n"), FormatError);
    EXPECT_THROW((void)parseCurve("scnr_db,GLRT_rate,GLRT_ci\n1,x,0\n"), FormatError);
    EXPECT_THROW((void)readCurve(path("missing.csv")), IoError);
}

TEST_F(CurveIo, ThresholdAndConvergenceTables) {
    ThresholdTable t;
    t.entries = {{{DetectorId::AMF, 0}, 1e-3, 3.84}, {{DetectorId::EM_BML_D, 5}, 1e-3, 93.5}};
    emitThresholds(t, path("t.csv"));
    EXPECT_EQ(slurp(path("t.csv")), "detector,pfa,threshold\nAMF,0.001,3.84\nEM_BML_D5,0.001,93.5\n");
    ConvergenceResult h0, h1;
    h0.meanDeltaL = {0.25, 1e-4};
    h1.scnrDb = 15.0;
    h1.meanDeltaL = {0.5, 2e-6};
    emitConvergence({h0, h1}, path("v.csv"));
    EXPECT_EQ(slurp(path("v.csv")), "iteration,H0,scnr_15\n1,0.25,0.5\n2,1e-04,2e-06\n");
}

TEST_F(CubeIo, ZeroCubeRoundTripsInBothFormats) {
    const DataCube zero(2, 2);
    for (CubeFormat f : {CubeFormat::InterleavedBinary, CubeFormat::Csv}) {
        writeCube(zero, path("z"), f);
        EXPECT_EQ(ingestCube(path("z"), f), zero) << cubeFormatName(f);
    }
    EXPECT_EQ(fs::file_size(path("z")) > 0, true);
    writeCube(zero, path("zb"), CubeFormat::InterleavedBinary);
    EXPECT_EQ(fs::file_size(path("zb")), 16u + 4u * 16u);
}

TEST_F(CubeIo, BinaryAndCsvIngestIdentically) {
    const DataCube c = randomCube(7, 5, 11);
    writeCube(c, path("c.bin"), CubeFormat::InterleavedBinary);
    writeCube(c, path("c.csv"), CubeFormat::Csv);
    const DataCube a = ingestCube(path("c.bin"), CubeFormat::InterleavedBinary);
    const DataCube b = ingestCube(path("c.csv"), CubeFormat::Csv);
    EXPECT_EQ(a, c);
    EXPECT_EQ(b, c);
    EXPECT_EQ(a, b);
}

TEST_F(CubeIo, BinaryLayoutIsLittleEndianPulseMajor) {
    DataCube c(1, 2);
    c.at(0, 0) = {1.0, -2.0};
    c.at(0, 1) = {0.5, 0.0};
    writeCube(c, path("l.bin"), CubeFormat::InterleavedBinary);
    const std::string bytes = slurp(path("l.bin"));
    ASSERT_EQ(bytes.size(), 16u + 32u);
    EXPECT_EQ(static_cast<unsigned char>(bytes[0]), 1u);
    EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 2u);
    double x;
    std::memcpy(&x, bytes.data() + 16 + 8, 8);
    EXPECT_EQ(x, -2.0);
    std::memcpy(&x, bytes.data() + 16 + 16, 8);
    EXPECT_EQ(x, 0.5);
}

TEST_F(CubeIo, CorruptionIsDetected) {
    const DataCube c = randomCube(3, 3, 13);
    writeCube(c, path("c.bin"), CubeFormat::InterleavedBinary);
    std::string bytes = slurp(path("c.bin"));
    bytes.pop_back();
    {
        std::ofstream out(path("short.bin"), std::ios::binary);
        out << bytes;
    }
    EXPECT_THROW((void)ingestCube(path("short.bin"), CubeFormat::InterleavedBinary), FormatError);
    bytes = slurp(path("c.bin"));
    bytes[0] = 4;  // header claims 4 pulses
    {
        std::ofstream out(path("hdr.bin"), std::ios::binary);
        out << bytes;
    }
    EXPECT_THROW((void)ingestCube(path("hdr.bin"), CubeFormat::InterleavedBinary), FormatError);
    {
        std::ofstream out(path("nan.csv"));
        out << "1,2,3,4\nnan,0,1,1\n";
    }
    EXPECT_THROW((void)ingestCube(path("nan.csv"), CubeFormat::Csv), FormatError);
    {
        std::ofstream out(path("ragged.csv"));
        out << "1,2,3,4\n1,2\n";
    }
    EXPECT_THROW((void)ingestCube(path("ragged.csv"), CubeFormat::Csv), FormatError);
    DataCube bad(1, 1);
    bad.at(0, 0) = {std::numeric_limits<double>::infinity(), 0.0};
    EXPECT_THROW(writeCube(bad, path("inf.bin"), CubeFormat::InterleavedBinary), FormatError);
    EXPECT_THROW((void)ingestCube(path("absent.bin"), CubeFormat::InterleavedBinary), IoError);
}

TEST(CubeFormatNames, RoundTrip) {
    for (CubeFormat f : {CubeFormat::InterleavedBinary, CubeFormat::Csv})
        EXPECT_EQ(parseCubeFormat(cubeFormatName(f)), f);
    EXPECT_FALSE(parseCubeFormat("npy").has_value());
}

TEST(WindowCount, Counting) {
    EXPECT_EQ(windowCount(30720, 8, 0), 30720u / 8u);
    EXPECT_EQ(windowCount(30, 8, 0), 3u);
    EXPECT_EQ(windowCount(30720, 8, 5), 10238u);
    EXPECT_EQ(windowCount(7, 8, 5), 0u);
    EXPECT_EQ(windowCount(8, 8, 5), 1u);
    EXPECT_THROW((void)windowCount(100, 8, 8), ValidationError);
}

TEST(WindowBatch, SecondariesFlankTheCut) {
    DataCube c(20, 12);
    for (std::size_t p = 0; p < 20; ++p)
        for (std::size_t b = 0; b < 12; ++b) c.at(p, b) = {static_cast<double>(p), static_cast<double>(b)};
    SlidingWindowSettings s;
    s.n = 4;
    s.k = 4;
    s.overlap = 1;
    const DataBatch b = windowBatch(c, s, 2, 6);
    EXPECT_EQ(b.cut, (ComplexVector{{6, 6}, {7, 6}, {8, 6}, {9, 6}}));
    ASSERT_EQ(b.secondary.size(), 4u);
    const std::size_t bins[] = {4, 5, 7, 8};
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(b.secondary[i][0], Complex(6.0, static_cast<double>(bins[i])));
        EXPECT_EQ(b.secondary[i][3], Complex(9.0, static_cast<double>(bins[i])));
    }
}

TEST(SynthesizeCube, PulseCorrelationMatchesModel) {
    ScenarioConfig cfg;
    cfg.masterSeed = 5;
    cfg.cnrDb = 10.0;
    const DataCube c = synthesizeCube(cfg, 20000, 4);
    const HermitianMatrix m = buildCovariance(cfg);
    for (std::size_t lag : {0u, 1u, 3u}) {
        Complex acc{0.0, 0.0};
        std::size_t count = 0;
        for (std::size_t b = 0; b < 4; ++b)
            for (std::size_t p = 0; p + lag < 20000; ++p, ++count) acc += c.at(p + lag, b) * std::conj(c.at(p, b));
        const Complex est = acc / static_cast<double>(count);
        EXPECT_LE(std::abs(est - m(lag, 0)), 0.05 * m(0, 0).real()) << "lag " << lag;
    }
    EXPECT_EQ(synthesizeCube(cfg, 50, 3), synthesizeCube(cfg, 50, 3));
}

TEST(SlidingWindowRun, SyntheticCubeHoldsPfa) {
    ScenarioConfig cfg;
    cfg.masterSeed = 21;
    const DataCube cube = synthesizeCube(cfg, 6008, 40);
    SlidingWindowSettings s;
    s.cutBin = 8;
    s.evalBin = 30;
    s.pfa = 0.05;
    s.scnrGridDb = {10.0, 20.0};
    s.detectors = {{DetectorId::GLRT, 0}, {DetectorId::AMF, 0}, {DetectorId::EM_BML_D, 5}};
    const CurveResult r = slidingWindowRun(cube, s);
    const std::size_t n = windowCount(6008, 8, 5);
    ASSERT_EQ(n, 2001u);
    ASSERT_EQ(r.rows(), 4u);
    EXPECT_EQ(r.axisNames, (std::vector<std::string>{"range_bin", "scnr_db"}));
    EXPECT_EQ(r.axes[0][0], 8.0);
    EXPECT_EQ(r.axes[1][0], 30.0);
    EXPECT_TRUE(std::isinf(r.axes[1][1]));
    // consecutive windows share pulses, so use the conservative two-sample sigma
    const double sigma = std::sqrt(2.0 * s.pfa * (1 - s.pfa) / static_cast<double>(n));
    for (const auto& d : s.detectors) {
        EXPECT_NEAR(r.rateAt(0, d), s.pfa, 1.0 / static_cast<double>(n) + 1e-12) << d.label();
        EXPECT_NEAR(r.rateAt(1, d), s.pfa, 3.0 * sigma * 1.5) << d.label();
        EXPECT_GE(r.rateAt(3, d), r.rateAt(2, d)) << d.label();
        EXPECT_GT(r.rateAt(3, d), 0.5) << d.label();
    }
}

TEST(SlidingWindowRun, RejectsUndersizedCubesAndBenchmark) {
    ScenarioConfig cfg;
    const DataCube cube = synthesizeCube(cfg, 200, 20);
    SlidingWindowSettings s;
    s.cutBin = 8;
    s.evalBin = 12;
    s.pfa = 0.2;
    s.detectors = {{DetectorId::AMF, 0}};
    EXPECT_THROW((void)slidingWindowRun(cube, s), InsufficientData);
    s.evalBin = 11;
    s.cutBin = 7;
    EXPECT_THROW((void)slidingWindowRun(cube, s), InsufficientData);
    s.cutBin = 8;
    EXPECT_THROW((void)slidingWindowRun(synthesizeCube(cfg, 7, 20), s), InsufficientData);
    s.detectors = {{DetectorId::BENCHMARK, 0}};
    EXPECT_THROW((void)slidingWindowRun(cube, s), ValidationError);
}
