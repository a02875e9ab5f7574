#include <gtest/gtest.h>

#include <filesystem>

#include "ahmm/io.hpp"
#include "fixtures.hpp"

using namespace ahmm;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "ahmm_io_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Io, ModelRoundTrip) {
  const auto h = example_model();
  const auto back = model_from_json(model_to_json(h));
  EXPECT_EQ(back.transition(), h.transition());
  EXPECT_EQ(back.emissions(), h.emissions());
  ASSERT_TRUE(back.aliased_pair());
  EXPECT_EQ(*back.aliased_pair(), *h.aliased_pair());
}

TEST(Io, AliasedPairIsOneBased) {
  const auto text = model_to_json(example_model());
  EXPECT_NE(text.find("\"aliased_pair\""), std::string::npos);
  const auto h = model_from_json(R"({"n": 2, "transition": [[0.5, 0.5], [0.5, 0.5]],
    "emissions": [{"mean": 0, "var": 1}, {"mean": 1, "var": 2}]})");
  EXPECT_FALSE(h.is_aliased());
  EXPECT_DOUBLE_EQ(h.emissions()[1].var, 2.0);
}

TEST(Io, RejectsMalformedModels) {
  EXPECT_THROW(model_from_json("{"), ValidationError);
  EXPECT_THROW(model_from_json(R"({"n": 3, "transition": [[1]], "emissions": []})"), ValidationError);
  EXPECT_THROW(model_from_json(R"({"n": 2, "transition": [[0.5, 0.5], [0.5, 0.5]],
    "emissions": [{"mean": 0, "var": 1}, {"mean": 1, "var": 1}], "aliased_pair": [1, 2]})"),
               ValidationError);
}

TEST(Io, OutputsCsvRoundTripIsExact) {
  const std::vector<double> y{0.1, -3.25, 1e-300, 123456.789012345678};
  const auto p = scratch("y.csv");
  write_outputs_csv(p, y);
  EXPECT_EQ(read_outputs_csv(p), y);
  EXPECT_EQ(read_text(p).substr(0, 2), "y\n");
}

TEST(Io, StatesCsvIsOneBased) {
  const std::vector<int> x{0, 1, 3, 2};
  const auto p = scratch("x.csv");
  write_states_csv(p, x);
  EXPECT_EQ(read_text(p), "x\n1\n2\n4\n3\n");
  EXPECT_EQ(read_states_csv(p), x);
}

TEST(Io, MissingFileIsValidationError) {
  EXPECT_THROW(read_outputs_csv("/nonexistent/ahmm/y.csv"), ValidationError);
  EXPECT_THROW(load_model("/nonexistent/ahmm/m.json"), ValidationError);
}
