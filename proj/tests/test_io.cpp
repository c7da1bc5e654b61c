#include <gtest/gtest.h>

#include "cia/errors.hpp"
#include "cia/io.hpp"

#include <filesystem>
#include <functional>
#include <random>

namespace {

using Eigen::MatrixXd;

cia::ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const cia::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return cia::ErrorCode::kInvalidArgument;
}

TEST(Csv, RoundTripIsBitExact) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const cia::RoundingGrid g({0.0, 0.1, 0.35, 1.0 / 3.0 + 0.5, 2.0});
  MatrixXd vals(2, 4);
  for (Eigen::Index k = 0; k < vals.size(); ++k) vals.data()[k] = u(rng);
  const cia::PiecewiseConstantControl v(g, vals);
  const std::string text = cia::control_to_csv(v);
  EXPECT_EQ(text.substr(0, text.find('\n')), "cell_start,cell_end,value_1,value_2");
  const auto back = cia::control_from_csv(text);
  EXPECT_TRUE(back.grid() == g);
  EXPECT_EQ(back.values(), vals);
  EXPECT_EQ(cia::control_to_csv(back), text);
}

TEST(Csv, BinaryHeaderAndTolerantParsing) {
  const cia::RoundingGrid g = cia::RoundingGrid::uniform(0, 1, 2);
  const cia::BinaryControl w(g, 3, {2, 0});
  EXPECT_EQ(cia::control_to_csv(w), "cell_start,cell_end,alpha_1,alpha_2,alpha_3\n0,0.5,0,0,1\n0.5,1,1,0,0\n");
  const auto v = cia::control_from_csv("cell_start, cell_end ,a\r\n0, 0.5, +1\r\n\r\n0.5,1,-2e-1\r\n");
  EXPECT_EQ(v.values()(0, 1), -0.2);
  EXPECT_EQ(cia::grid_from_csv("cell_start,cell_end\n0,1\n1,3\n").size(), 2u);
}

TEST(Csv, Malformed) {
  using cia::ErrorCode;
  EXPECT_EQ(code_of([] { cia::control_from_csv(""); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { cia::control_from_csv("start,end,v\n0,1,2\n"); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { cia::control_from_csv("cell_start,cell_end,v\n"); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { cia::control_from_csv("cell_start,cell_end,v\n0,1,x\n"); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { cia::control_from_csv("cell_start,cell_end,v\n0,1\n"); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { cia::control_from_csv("cell_start,cell_end\n0,1\n"); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { cia::grid_from_csv("cell_start,cell_end\n0,1\n1.5,2\n"); }), ErrorCode::kInvalidArgument);
}

TEST(SpecJson, ScalarAndVectorForms) {
  const auto s = cia::spec_from_json(R"({"bangs": [-1, 0, 1], "weights": [1, 0, 1]})");
  EXPECT_EQ(s.dim(), 1);
  EXPECT_EQ(s.count(), 3);
  const auto p = cia::spec_from_json(R"({"bangs": [[0,0],[1,0],[0,1]], "weights": [0, 1, 2]})");
  EXPECT_EQ(p.dim(), 2);
  EXPECT_EQ(p.bangs()(1, 2), 1.0);
  const auto again = cia::spec_from_json(cia::spec_to_json(p));
  EXPECT_EQ(again.bangs(), p.bangs());
  EXPECT_EQ(again.weights(), p.weights());
}

TEST(SpecJson, Rejects) {
  using cia::ErrorCode;
  EXPECT_EQ(code_of([] { cia::spec_from_json("[1,2]"); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { cia::spec_from_json(R"({"bangs": [0, 1]})"); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { cia::spec_from_json(R"({"bangs": [0, 1], "weights": [0]})"); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { cia::spec_from_json(R"({"bangs": [[0,1], 1], "weights": [0, 1]})"); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { cia::spec_from_json(R"({"bangs": ["a", 1], "weights": [0, 1]})"); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { cia::spec_from_json("{"); }), ErrorCode::kInvalidArgument);
}

TEST(Files, MissingFileIsIoError) {
  const auto p = std::filesystem::temp_directory_path() / "cia_test_missing" / "nope.csv";
  EXPECT_EQ(code_of([&] { cia::read_file(p); }), cia::ErrorCode::kIoError);
  EXPECT_EQ(code_of([&] { cia::write_file(p, "x"); }), cia::ErrorCode::kIoError);
}

TEST(Format, ShortestRoundTrip) {
  EXPECT_EQ(cia::format_double(0.1), "0.1");
  EXPECT_EQ(cia::format_double(1e-300), "1e-300");
  EXPECT_EQ(std::stod(cia::format_double(1.0 / 3.0)), 1.0 / 3.0);
}

}  // namespace
