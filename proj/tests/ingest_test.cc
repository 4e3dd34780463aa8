// Copyright 2026 The fairprep Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "fairprep/ingest.h"

#include <filesystem>

#include "gtest/gtest.h"
#include "test_util.h"

namespace fairprep {
namespace {

using ::fairprep::testing::MakeSchema;

TEST(ParseDelimitedTest, QuotesAndBlankLines) {
  SourceSpec spec;
  const Table t = *ParseDelimited(
      "a,b,c\n1,\"x, y\",\"say \"\"hi\"\"\"\n\n2,\"two\nlines\",z\r\n", spec);
  ASSERT_EQ(t.columns, (std::vector<std::string>{"a", "b", "c"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][1], "x, y");
  EXPECT_EQ(t.rows[0][2], "say \"hi\"");
  EXPECT_EQ(t.rows[1][1], "two\nlines");
  EXPECT_EQ(t.rows[1][2], "z");
}

TEST(ParseDelimitedTest, HeaderlessTrimmedWithSkippedLines) {
  SourceSpec spec;
  spec.header = false;
  spec.column_names = {"age", "income"};
  spec.trim = true;
  spec.skip_prefix = "|";
  const Table t = *ParseDelimited("|1x3 Cross validator\n 25, <=50K.\n", spec);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][1], "<=50K.");
}

TEST(ParseDelimitedTest, Errors) {
  SourceSpec spec;
  EXPECT_FALSE(ParseDelimited("a,b\n1\n", spec).ok());
  EXPECT_FALSE(ParseDelimited("a,b\n1,\"open\n", spec).ok());
  EXPECT_FALSE(ParseDelimited("", spec).ok());
  spec.paths = {"/nonexistent/file.csv"};
  EXPECT_EQ(ReadTable(spec).status().code(), absl::StatusCode::kNotFound);
}

TEST(FilterTest, RangeInNotIn) {
  Table t{{"n", "s"}, {{"-31", "a"}, {"0", "b"}, {"30", "c"}, {"x", "a"}}};
  IngestReport report;
  const Table r = *ApplyFilters(
      t, {{"n", RowFilter::Op::kRange, -30.0, 30.0, {}}}, &report);
  EXPECT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(report.rows_filtered, 2);
  const Table in =
      *ApplyFilters(t, {{"s", RowFilter::Op::kIn, {}, {}, {"a"}}}, nullptr);
  EXPECT_EQ(in.rows.size(), 2u);
  const Table out = *ApplyFilters(
      t, {{"s", RowFilter::Op::kNotIn, {}, {}, {"a", "b"}}}, nullptr);
  ASSERT_EQ(out.rows.size(), 1u);
  EXPECT_EQ(out.rows[0][1], "c");
  EXPECT_FALSE(ApplyFilters(t, {{"zz", RowFilter::Op::kIn}}, nullptr).ok());
}

Schema QuantizedSchema() {
  Quantizer bins{Quantizer::Kind::kBins, {}, {0.5, 3.5}, {"0", "1-3", ">3"}};
  Quantizer income{
      Quantizer::Kind::kMap, {{"<=50K", "0"}, {">50K", "1"}}, {}, {}};
  std::vector<Variable> vars = {
      {*Alphabet::Create("sex", {"Female", "Male"}), Role::kProtected, "", {}},
      {*Alphabet::Create("priors", {"0", "1-3", ">3"}, true), Role::kFeature,
       "priors_count", bins},
      {*Alphabet::Create("y", {"0", "1"}, true), Role::kOutcome, "income",
       income},
  };
  return *Schema::Create(vars);
}

TEST(BuildDatasetTest, QuantizesAndDropsMissing) {
  const Schema schema = QuantizedSchema();
  SourceSpec spec;
  spec.missing_marker = "?";
  const Table t = *ParseDelimited(
      "sex,priors_count,income,other\nMale,0,<=50K,?\nFemale,4,>50K,1\n"
      "Male,?,>50K,1\nFemale,2,<=50K,2\n",
      spec);
  IngestReport report;
  const Dataset d = *BuildDataset(t, schema, spec, true, &report);
  ASSERT_EQ(d.size(), 3);
  EXPECT_EQ(report.rows_missing, 1);
  EXPECT_EQ(d.records()[0], (Record{1, 0, 0}));
  EXPECT_EQ(d.records()[1], (Record{0, 2, 1}));
  EXPECT_EQ(d.records()[2], (Record{0, 1, 0}));
}

TEST(BuildDatasetTest, OutcomeColumnOptionalInApplyMode) {
  const Schema schema = QuantizedSchema();
  SourceSpec spec;
  const Table t = *ParseDelimited("sex,priors_count\nMale,1\n", spec);
  EXPECT_EQ(BuildDataset(t, schema, spec, true, nullptr).status().code(),
            absl::StatusCode::kFailedPrecondition);
  const Dataset d = *BuildDataset(t, schema, spec, false, nullptr);
  EXPECT_FALSE(d.records()[0].outcome.has_value());
  const Table bad = *ParseDelimited("sex,priors_count\nOther,1\n", spec);
  EXPECT_FALSE(BuildDataset(bad, schema, spec, false, nullptr).ok());
}

TEST(CategoricalTest, RoundTripWithIndexAndComments) {
  const Schema schema = QuantizedSchema();
  const Dataset d = *Dataset::Create(schema, {{0, 2, 1}, {1, 0, 0}, {1, 1, 1}});
  WriteOptions options;
  options.stream_index = true;
  options.first_index = 10;
  options.comment_lines = {"fairprep-data fingerprint=abc"};
  const std::string text = WriteCategorical(d, options);
  EXPECT_EQ(text,
            "# fairprep-data fingerprint=abc\nsex,priors,y,stream_index\n"
            "Female,>3,1,10\nMale,0,0,11\nMale,1-3,1,12\n");
  const CategoricalFile back = *ParseCategorical(text, schema);
  EXPECT_TRUE(std::ranges::equal(back.data.records(), d.records()));
  EXPECT_EQ(*back.stream_index, (std::vector<uint64_t>{10, 11, 12}));
  EXPECT_EQ(back.comment_lines[0], "fairprep-data fingerprint=abc");
}

TEST(CategoricalTest, FilesRoundTrip) {
  const std::string path =
      (std::filesystem::temp_directory_path() / "fairprep_ingest_test.txt")
          .string();
  ASSERT_TRUE(WriteStringToFile(path, "abc\n").ok());
  EXPECT_EQ(*ReadFileToString(path), "abc\n");
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace fairprep
