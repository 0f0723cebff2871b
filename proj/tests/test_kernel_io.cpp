#include <gtest/gtest.h>

#include <filesystem>

#include "levi/kernel_io.hpp"

using namespace levi;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("levi_" + name)).string();
}

KernelTable small_table(const ModelSpec& m) {
  ParametrixConfig c;
  c.steps = 8;
  c.horizon = 0.5;
  c.step = 1.0 / 4;
  c.core = 2.0;
  c.outer = 40.0;
  ParametrixScheme s(m, c);
  return assemble_p(s, sum_series(s));
}

}  // namespace

TEST(KernelIo, TableRoundTripIsExact) {
  const auto m = presets::default_test();
  auto T = small_table(m);
  const auto path = temp_path("table.bin");
  write_kernel_table(path, T);
  auto R = read_kernel_table(path, m);
  EXPECT_EQ(R.time.steps, T.time.steps);
  EXPECT_EQ(R.time.dt, T.time.dt);
  EXPECT_EQ(R.lattice.nodes, T.lattice.nodes);
  EXPECT_EQ(R.lattice.weights, T.lattice.weights);
  EXPECT_EQ(R.model_hash, T.model_hash);
  for (int k = 0; k <= T.time.steps; ++k) {
    EXPECT_TRUE((R.p_raw[k].array() == T.p_raw[k].array()).all());
    EXPECT_TRUE((R.p[k].array() == T.p[k].array()).all());
    EXPECT_TRUE((R.conv[k].array() == T.conv[k].array()).all());
  }
  std::filesystem::remove(path);
}

TEST(KernelIo, HeaderIsReadableText) {
  auto T = small_table(presets::cauchy_constant());
  const auto path = temp_path("header.bin");
  write_kernel_table(path, T);
  std::ifstream is(path, std::ios::binary);
  auto h = io::read_header(is);
  EXPECT_EQ(h.record, "kernel-table");
  EXPECT_EQ(h.at("d"), "1");
  EXPECT_EQ(h.integer("time_steps"), 8);
  EXPECT_EQ(h.at("layout"), "nodes weights p_raw conv");
  std::filesystem::remove(path);
}

TEST(KernelIo, ModelMismatchIsRejected) {
  auto T = small_table(presets::cauchy_constant());
  const auto path = temp_path("mismatch.bin");
  write_kernel_table(path, T);
  try {
    read_kernel_table(path, presets::default_test());
    FAIL() << "expected model mismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::model_mismatch);
  }
  std::filesystem::remove(path);
}

TEST(KernelIo, ZvonkinMapRoundTrip) {
  std::vector<double> u, g;
  const double step = 0.1, P = 2 * pi, first = -0.5 * P - 3 * step;
  for (int r = 0; first + r * step <= 0.5 * P + 3 * step; ++r) {
    const double x = first + r * step;
    u.push_back(0.1 * std::sin(x));
    g.push_back(0.1 * std::cos(x));
  }
  ZvonkinMap map(7.5, PeriodicField(P, first, step, u), PeriodicField(P, first, step, g));
  const auto path = temp_path("map.bin");
  write_zvonkin_map(path, map, 42);
  auto r = read_zvonkin_map(path, 42);
  EXPECT_EQ(r.lambda(), 7.5);
  for (double x : {-4.0, 0.0, 0.37, 9.1}) {
    EXPECT_EQ(r(x), map(x));
    EXPECT_EQ(r.derivative(x), map.derivative(x));
  }
  EXPECT_THROW(read_zvonkin_map(path, 43), Error);
  EXPECT_THROW(read_kernel_table(path, presets::cauchy_constant()), Error);
  std::filesystem::remove(path);
}

TEST(KernelIo, MissingFileIsAnIoError) {
  try {
    read_zvonkin_map("/nonexistent/levi.map");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::io);
  }
}
