#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "mswave/trace_io.hpp"
#include "mswave/waveop.hpp"

using namespace mswave;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / "mswave_trace_io";
    fs::create_directories(d);
    return d / name;
}

SpaceTimeTrace sample_trace() {
    const Grid g = Grid::symmetric_staggered(3.0, 48, 5.0, 0.8, 2.0);
    auto tr = sample_function(g, 3, [](double t, double x) { return std::sin(t) * x * x * x + 1e-300; }, 2.0,
                              Parity::odd);
    tr.samples[5] = -0.0;
    return tr;
}

}  // namespace

TEST(TraceIO, HeaderLayout) {
    const auto tr = sample_trace();
    const std::string h = encode_trace_header(tr);
    ASSERT_EQ(h.size(), trace_header_bytes);
    EXPECT_EQ(std::memcmp(h.data(), "MSWL1", 5), 0);
    std::uint64_t nx = 0;
    for (int b = 7; b >= 0; --b) nx = (nx << 8) | static_cast<unsigned char>(h[16 + b]);
    EXPECT_EQ(nx, 48u);
}

TEST(TraceIO, RoundTripIsBitExact) {
    const auto tr = sample_trace();
    const auto p = scratch("round.mswl");
    write_trace(p, tr, {{"note", "test"}});
    const auto back = read_trace(p);
    ASSERT_TRUE(back.same_layout(tr));
    EXPECT_EQ(back.parity, Parity::odd);
    EXPECT_EQ(back.c, 2.0);
    ASSERT_EQ(back.samples.size(), tr.samples.size());
    EXPECT_EQ(std::memcmp(back.samples.data(), tr.samples.data(), tr.samples.size() * sizeof(double)), 0);
    EXPECT_TRUE(fs::exists(p.string() + ".json"));
}

TEST(TraceIO, BlowupMarkerSurvives) {
    auto tr = sample_trace();
    tr.blowup_time = 4.75;
    const auto p = scratch("blowup.mswl");
    write_trace(p, tr);
    EXPECT_EQ(read_trace(p).blowup_time.value_or(-1.0), 4.75);
}

TEST(TraceIO, RejectsForeignAndTruncatedFiles) {
    const auto bad = scratch("bad.mswl");
    {
        std::ofstream out(bad, std::ios::binary);
        out << std::string(100, 'x');
    }
    EXPECT_THROW(read_trace(bad), ValidationError);

    const auto tr = sample_trace();
    const auto p = scratch("cut.mswl");
    write_trace(p, tr);
    fs::resize_file(p, fs::file_size(p) - 8);
    EXPECT_THROW(read_trace(p), ValidationError);
    EXPECT_THROW(read_trace(scratch("missing.mswl")), Error);
}
