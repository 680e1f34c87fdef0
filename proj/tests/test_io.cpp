#include "smlct/config.hpp"
#include "smlct/io.hpp"
#include "smlct/png.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace smlct;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
protected:
    void SetUp() override
    {
        dir_ = fs::temp_directory_path() /
               ("smlct_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    fs::path dir_;
};

KeyValues parse(const std::string& text)
{
    std::istringstream in(text);
    return parse_key_values(in);
}

} // namespace

TEST(KeyValues, SectionsAndComments)
{
    const auto kv = parse("top = 1\n[geometry]  # comment\n  l = 12.5 \n\n[errors]\nds=0.8\n");
    EXPECT_EQ(kv.at("top"), "1");
    EXPECT_EQ(kv.at("geometry.l"), "12.5");
    EXPECT_EQ(kv.at("errors.ds"), "0.8");
    EXPECT_THROW(parse("[a]\nx = 1\nx = 2\n"), Error);
    EXPECT_THROW(parse("novalue\n"), Error);
    EXPECT_THROW(parse("[broken\n"), Error);
    EXPECT_THROW(parse(" = 3\n"), Error);
}

TEST(RunConfig, DefaultsDescribeTenSegmentScan)
{
    const auto c = parse_run_config({});
    const auto g = c.scan_geometry();
    EXPECT_EQ(g.t_segments, 10);
    EXPECT_EQ(c.geometry.grid, 512u);
    EXPECT_FALSE(c.noise.enabled);
    EXPECT_EQ(c.recon.kernel, FilterSpec::Kernel::hilbert);
}

TEST(RunConfig, ParsesEveryKind)
{
    const auto c = parse_run_config(parse("[geometry]\nh = 90.5\ns = 30\nl = 13.75\nt_extra = 0\n"
                                          "[errors]\ndu_bins = 5\ntheta_d_deg = 1\n"
                                          "[noise]\nenabled = yes\nseed = 18446744073709551615\n"
                                          "[recon]\nkernel = ramp\nredundancy = uniform\n"
                                          "[registration]\nalpha_deg = 20\nu0 = 32\n"
                                          "[sweep]\nlength_values = -1, 0.5 ,2\n"));
    EXPECT_EQ(c.scan_geometry().t_segments, 6);
    EXPECT_NEAR(c.error_set().du_off, 5 * 0.17, 1e-15);
    EXPECT_NEAR(c.error_set().theta_d, deg2rad(1.0), 1e-15);
    EXPECT_TRUE(c.noise.enabled);
    EXPECT_EQ(c.noise.seed, 18446744073709551615ull);
    EXPECT_EQ(c.recon.kernel, FilterSpec::Kernel::ramp);
    EXPECT_EQ(c.recon.redundancy, FilterSpec::Redundancy::uniform);
    ASSERT_TRUE(c.mask_params().alpha_band);
    EXPECT_NEAR(*c.mask_params().alpha_band, deg2rad(20.0), 1e-15);
    EXPECT_EQ(*c.mask_params().u0, 32u);
    EXPECT_EQ(c.sweep.length_values, (std::vector<double>{-1.0, 0.5, 2.0}));
}

TEST(RunConfig, RejectsBadInput)
{
    EXPECT_THROW(parse_run_config(parse("[geometry]\nbogus = 1\n")), Error);
    EXPECT_THROW(parse_run_config(parse("[geometry]\nl = abc\n")), Error);
    EXPECT_THROW(parse_run_config(parse("[geometry]\ngrid = -4\n")), Error);
    EXPECT_THROW(parse_run_config(parse("[geometry]\nt_extra = 0\n")), Error); // odd T
    EXPECT_THROW(parse_run_config(parse("[recon]\nkernel = shepp\n")), Error);
    EXPECT_THROW(parse_run_config(parse("[noise]\nenabled = maybe\n")), Error);
    EXPECT_THROW(parse_run_config(parse("[errors]\ntheta_d_deg = 95\n")), Error);
}

TEST(RunConfig, TextFormRoundTrips)
{
    auto c = parse_run_config(parse("[errors]\ndl = 2\nds = 0.8\n[registration]\nu0 = 16\n[sweep]\ngrid = 64\n"));
    const std::string text = to_text(c);
    const auto back = parse_run_config(parse(text));
    EXPECT_EQ(to_text(back), text);
    EXPECT_EQ(fnv1a64(to_text(back)), fnv1a64(text));
}

TEST(RunConfig, RequestSegments)
{
    auto c = parse_run_config({});
    c.request_segments(12);
    EXPECT_EQ(c.scan_geometry().t_segments, 12);
    EXPECT_THROW(c.request_segments(8), Error);
    EXPECT_THROW(c.request_segments(11), Error);
}

TEST(Hash, KnownVectors)
{
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
    EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(Csv, Quoting)
{
    EXPECT_EQ(csv_field("plain"), "plain");
    EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    EXPECT_EQ(format_number(0.25), "0.25");
}

TEST_F(TempDir, RawFloatRoundTrip)
{
    Matrix m(3, 5);
    for (std::size_t i = 0; i < m.size(); ++i)
        m.data()[i] = 0.5 * static_cast<double>(i) - 1.0;
    write_raw_f32(dir_ / "m.f32", m);
    EXPECT_EQ(fs::file_size(dir_ / "m.f32"), 60u);
    EXPECT_EQ(read_raw_f32(dir_ / "m.f32", 3, 5), m);
    EXPECT_THROW(read_raw_f32(dir_ / "m.f32", 4, 5), Error);
    EXPECT_THROW(read_raw_f32(dir_ / "m.f32", 2, 5), Error);

    // Little-endian byte order on disk.
    std::ifstream in(dir_ / "m.f32", std::ios::binary);
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    EXPECT_EQ(b[0], 0x00); // -1.0f = 0xbf800000
    EXPECT_EQ(b[3], 0xbf);
}

TEST_F(TempDir, SinogramRoundTrip)
{
    const auto g = make_scan_geometry(13.75, 90.5, 30.0, 384, 0.34, 9, 0);
    ErrorSet e;
    e.dl = 1.4;
    e.theta_d = 0.01;
    Sinogram s = forward_project_segment(phantom_preset("shepp-logan", 5.0, 0.02), g, e, 4);
    save_sinogram(dir_ / "s", s);
    const Sinogram back = load_sinogram(dir_ / "s");
    EXPECT_EQ(back.segment, 4);
    EXPECT_DOUBLE_EQ(back.theta, s.theta);
    EXPECT_EQ(back.geom.t_segments, 6);
    EXPECT_DOUBLE_EQ(back.simulated_errors.dl, 1.4);
    EXPECT_EQ(back.lambda_samples, s.lambda_samples);
    for (std::size_t i = 0; i < s.values.size(); ++i)
        EXPECT_EQ(back.values.data()[i], static_cast<double>(static_cast<float>(s.values.data()[i])));
    EXPECT_THROW(load_image(dir_ / "s"), Error);
}

TEST_F(TempDir, ImageRoundTripAndPng)
{
    auto img = SegmentImage::zeros(make_grid(3.0, 6, 8), 2, 0.5);
    for (std::size_t i = 0; i < img.values.size(); ++i)
        img.values.data()[i] = static_cast<double>(i);
    save_image(dir_ / "img", img, {{"note", "x"}});
    const auto back = load_image(dir_ / "img");
    EXPECT_EQ(back.grid, img.grid);
    EXPECT_EQ(back.segment, 2);
    EXPECT_EQ(back.values, img.values);
    EXPECT_EQ(read_json(dir_ / "img.json").at("note"), "x");

    const auto w = min_max_window(img.values);
    EXPECT_EQ(w.lo, 0.0);
    EXPECT_EQ(w.hi, 47.0);
    write_png16(dir_ / "img.png", img.values, w);
    std::ifstream png(dir_ / "img.png", std::ios::binary);
    char sig[8];
    png.read(sig, 8);
    EXPECT_EQ(std::string(sig + 1, 3), "PNG");
}

TEST(JsonForms, GeometryAndGrid)
{
    auto g = make_scan_geometry(15.0, 170.0, 20.0, 768, 0.17, 251, 1);
    g.lambda_offset = 0.833;
    const auto back = scan_geometry_from_json(to_json(g));
    EXPECT_DOUBLE_EQ(back.lambda_offset, 0.833);
    EXPECT_EQ(back.t_segments, 10);
    const auto grid = make_grid(11.88, 512);
    EXPECT_EQ(image_grid_from_json(to_json(grid)), grid);
}
