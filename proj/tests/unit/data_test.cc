/*
 * Copyright 2026 The IFENet Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "ifenet/data.h"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <numeric>
#include <set>
#include <string>

namespace ifenet {
namespace {

std::filesystem::path DataDir() {
  const char* env = std::getenv("IFENET_TEST_DATA");
  return env != nullptr ? std::filesystem::path(env) : std::filesystem::path("data");
}

constexpr const char* kPassengers =
    "pclass,survived,sex,age,fare\n"
    "1st,yes,female,29,211.3\n"
    "3rd,no,male,NA,7.25\n"
    "2nd,no,male,30,13\n"
    "3rd,yes,female,4,16.7\n"
    "\"1st\",no,\"male\",47,\"52\"\n";

TEST(CsvTest, InfersColumnKindsAndMissingCells) {
  const RawTable t = ParseCsv(kPassengers, "survived");
  ASSERT_EQ(t.num_columns(), 5u);
  ASSERT_EQ(t.num_rows(), 5u);
  EXPECT_EQ(t.kinds[0], ColumnKind::kCategorical);
  EXPECT_EQ(t.kinds[1], ColumnKind::kCategorical);
  EXPECT_EQ(t.kinds[3], ColumnKind::kNumeric);
  EXPECT_EQ(t.kinds[4], ColumnKind::kNumeric);
  EXPECT_FALSE(t.rows[1][3].has_value());
  EXPECT_EQ(*t.rows[4][0], "1st");
}

TEST(CsvTest, LabelIsAlwaysCategorical) {
  const RawTable t = ParseCsv("a,b\n1,0\n2,1\n", "b");
  EXPECT_EQ(t.kinds[1], ColumnKind::kCategorical);
}

TEST(CsvTest, KindOverrideWins) {
  const RawTable t = ParseCsv("zip,y\n12345,a\n54321,b\n", "y", {{"zip", ColumnKind::kCategorical}});
  EXPECT_EQ(t.kinds[0], ColumnKind::kCategorical);
}

TEST(CsvTest, QuotedFieldsKeepDelimitersAndEscapedQuotes) {
  const RawTable t = ParseCsv("name,y\n\"Smith, \"\"Jr\"\"\",a\nLee,b\n", "y");
  EXPECT_EQ(*t.rows[0][0], "Smith, \"Jr\"");
}

TEST(CsvTest, AlternativeDelimiter) {
  CsvOptions opts;
  opts.delimiter = ';';
  const RawTable t = ParseCsv("a;y\n1.5;p\n2;q\n", "y", {}, opts);
  EXPECT_EQ(t.kinds[0], ColumnKind::kNumeric);
  EXPECT_EQ(*t.rows[0][0], "1.5");
}

TEST(CsvTest, ErrorsCarryRowContext) {
  try {
    ParseCsv("a,b,y\n1,2,x\n3,y\n", "y");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(ParseCsv("a,y\n\"1,x\n", "y"), DataError);
  EXPECT_THROW(ParseCsv("a,b\n1,2\n", "label"), DataError);
  EXPECT_THROW(ParseCsv("", "y"), DataError);
}

TEST(CsvTest, DropMissingRemovesIncompleteRows) {
  const RawTable t = DropMissing(ParseCsv(kPassengers, "survived"));
  EXPECT_EQ(t.num_rows(), 4u);
  EXPECT_THROW(DropMissing(ParseCsv("a,y\nNA,1\n", "y")), DataError);
}

TEST(EncoderTest, OneHotColumnsInLexicographicOrder) {
  const RawTable t = DropMissing(ParseCsv(kPassengers, "survived"));
  const EncoderSpec spec = FitEncoder(t);
  const std::vector<std::string> expected = {"pclass=1st", "pclass=2nd", "pclass=3rd",
                                             "sex=female", "sex=male",   "age",
                                             "fare"};
  EXPECT_EQ(spec.feature_names(), expected);
  EXPECT_EQ(spec.classes, (std::vector<std::string>{"no", "yes"}));

  const EncodedDataset ds = ApplyEncoder(spec, t);
  ASSERT_EQ(ds.d(), 7);
  EXPECT_EQ(ds.y, (std::vector<int>{1, 0, 1, 0}));
  // Row "3rd,yes,female,4,16.7".
  EXPECT_EQ(ds.x(2, 2), 1.0);
  EXPECT_EQ(ds.x(2, 0) + ds.x(2, 1), 0.0);
  EXPECT_EQ(ds.x(2, 3), 1.0);
  EXPECT_EQ(ds.x(2, 5), 4.0);
  EXPECT_DOUBLE_EQ(ds.x(2, 6), 16.7);
  for (Eigen::Index r = 0; r < ds.n(); ++r) {
    EXPECT_EQ(ds.x.row(r).head(3).sum(), 1.0);
    EXPECT_EQ(ds.x.row(r).segment(3, 2).sum(), 1.0);
  }
}

TEST(EncoderTest, UnseenCategoryEncodesAsAllZeros) {
  const EncoderSpec spec = FitEncoder(ParseCsv("c,y\nred,a\nblue,b\n", "y"));
  const EncodedDataset ds = ApplyEncoder(spec, ParseCsv("c,y\ngreen,a\n", "y"));
  EXPECT_EQ(ds.x.row(0).sum(), 0.0);
}

TEST(EncoderTest, UnseenLabelIsAnError) {
  const EncoderSpec spec = FitEncoder(ParseCsv("c,y\nred,a\nblue,b\n", "y"));
  EXPECT_THROW(ApplyEncoder(spec, ParseCsv("c,y\nred,z\n", "y")), DataError);
}

TEST(EncoderTest, SingleCategoryWarnsSingleClassFails) {
  const EncoderSpec spec = FitEncoder(ParseCsv("c,v,y\nk,1,a\nk,2,b\n", "y"));
  ASSERT_EQ(spec.warnings.size(), 1u);
  EXPECT_NE(spec.warnings[0].find("'c'"), std::string::npos);
  EXPECT_THROW(FitEncoder(ParseCsv("c,y\nk,a\nm,a\n", "y")), DataError);
}

TEST(EncoderTest, JsonRoundTrip) {
  const EncoderSpec spec = FitEncoder(DropMissing(ParseCsv(kPassengers, "survived")));
  const EncoderSpec back = EncoderSpec::FromJson(spec.ToJson());
  EXPECT_EQ(back.feature_names(), spec.feature_names());
  EXPECT_EQ(back.classes, spec.classes);
  EXPECT_EQ(back.label_column, spec.label_column);
  EXPECT_EQ(back.ToJson(), spec.ToJson());
  EXPECT_THROW(EncoderSpec::FromJson("{\"format\":\"other\"}"), FormatError);
  EXPECT_THROW(EncoderSpec::FromJson("not json"), FormatError);
}

EncodedDataset Blobs(size_t n, int classes) {
  EncodedDataset ds;
  ds.x = Matrix::Zero(static_cast<Eigen::Index>(n), 2);
  ds.num_classes = classes;
  ds.feature_names = {"a", "b"};
  for (size_t i = 0; i < n; ++i) {
    ds.x(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i);
    ds.y.push_back(static_cast<int>(i % static_cast<size_t>(classes)));
  }
  return ds;
}

TEST(SplitTest, TitanicSizedCountsAccepted) {
  SplitSpec spec;
  spec.counts = std::array<size_t, 3>{781, 66, 195};
  EXPECT_EQ(spec.Resolve(1042), (std::array<size_t, 3>{781, 66, 195}));
  const SplitResult s = Split(Blobs(1042, 2), spec);
  EXPECT_EQ(s.train.n(), 781);
  EXPECT_EQ(s.validation.n(), 66);
  EXPECT_EQ(s.test.n(), 195);
  EXPECT_TRUE(s.warnings.empty());
}

TEST(SplitTest, CountsAndFractionsValidated) {
  SplitSpec spec;
  spec.counts = std::array<size_t, 3>{10, 10, 10};
  EXPECT_THROW(spec.Resolve(31), InvalidArgument);
  spec.fractions = std::array<double, 3>{0.7, 0.15, 0.15};
  EXPECT_THROW(spec.Resolve(100), InvalidArgument);  // both given
  spec.counts.reset();
  EXPECT_EQ(spec.Resolve(1000), (std::array<size_t, 3>{700, 150, 150}));
  spec.fractions = std::array<double, 3>{0.5, 0.3, 0.3};
  EXPECT_THROW(spec.Resolve(100), InvalidArgument);
  spec.fractions = std::array<double, 3>{0.98, 0.01, 0.01};
  EXPECT_THROW(spec.Resolve(20), InvalidArgument);
}

TEST(SplitTest, PartitionIsDisjointAndCovering) {
  SplitSpec spec;
  spec.fractions = std::array<double, 3>{0.6, 0.2, 0.2};
  spec.seed = 9;
  const SplitResult s = Split(Blobs(250, 3), spec);
  std::set<size_t> all;
  for (const auto& idx : s.indices) {
    EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
    all.insert(idx.begin(), idx.end());
  }
  EXPECT_EQ(all.size(), 250u);
  for (size_t i = 0; i < s.indices[1].size(); ++i) {
    EXPECT_EQ(s.validation.x(static_cast<Eigen::Index>(i), 0), static_cast<double>(s.indices[1][i]));
  }
}

TEST(SplitTest, StratifiedProportionsTrackTheWhole) {
  EncodedDataset ds = Blobs(1000, 2);
  for (size_t i = 0; i < 1000; ++i) ds.y[i] = i < 300 ? 1 : 0;
  SplitSpec spec;
  spec.fractions = std::array<double, 3>{0.7, 0.15, 0.15};
  spec.seed = 3;
  const SplitResult s = Split(ds, spec);
  auto share = [](const EncodedDataset& part) {
    return std::accumulate(part.y.begin(), part.y.end(), 0.0) / static_cast<double>(part.n());
  };
  EXPECT_NEAR(share(s.train), 0.3, 0.01);
  EXPECT_NEAR(share(s.validation), 0.3, 0.01);
  EXPECT_NEAR(share(s.test), 0.3, 0.01);
}

TEST(SplitTest, RareClassFallsBackWithWarning) {
  EncodedDataset ds = Blobs(50, 2);
  for (auto& y : ds.y) y = 0;
  ds.y[7] = 1;
  ds.y[8] = 1;
  SplitSpec spec;
  spec.counts = std::array<size_t, 3>{30, 10, 10};
  const SplitResult s = Split(ds, spec);
  ASSERT_EQ(s.warnings.size(), 1u);
  EXPECT_NE(s.warnings[0].find("unstratified"), std::string::npos);
}

TEST(SplitTest, DeterministicPerSeed) {
  SplitSpec spec;
  spec.fractions = std::array<double, 3>{0.7, 0.15, 0.15};
  spec.seed = 4;
  const EncodedDataset ds = Blobs(200, 2);
  EXPECT_EQ(Split(ds, spec).indices, Split(ds, spec).indices);
  spec.seed = 5;
  SplitSpec other = spec;
  other.seed = 4;
  EXPECT_NE(Split(ds, spec).indices, Split(ds, other).indices);
}

TEST(SynthTest, PlantedTruthStructure) {
  const EncodedDataset ds = SynthDataset(1000, 10, 3, 0.1, 1);
  ASSERT_EQ(ds.n(), 1000);
  ASSERT_EQ(ds.d(), 10);
  ASSERT_TRUE(ds.planted_truth.has_value());
  const auto& groups = ds.planted_truth->groups;
  ASSERT_EQ(groups.size(), 4u);
  EXPECT_EQ(groups[0], (std::vector<size_t>{0}));
  EXPECT_EQ(groups[1], (std::vector<size_t>{1}));
  EXPECT_EQ(groups[2], (std::vector<size_t>{2}));
  EXPECT_EQ(groups[3], (std::vector<size_t>{3, 4, 5, 6, 7, 8, 9}));
  EXPECT_EQ(ds.feature_names.front(), "x0");
  ds.Validate();
}

TEST(SynthTest, LabelsFollowTheWeightedSum) {
  // With no label noise the class is the sign of 3*x0 + 2*x1 + x2.
  const EncodedDataset ds = SynthDataset(500, 6, 3, 0.0, 2);
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    const double score = 3.0 * ds.x(i, 0) + 2.0 * ds.x(i, 1) + ds.x(i, 2);
    EXPECT_EQ(ds.y[static_cast<size_t>(i)], score > 0.0 ? 1 : 0);
  }
}

TEST(SynthTest, SameSeedSameData) {
  const EncodedDataset a = SynthDataset(100, 5, 2, 0.2, 8);
  const EncodedDataset b = SynthDataset(100, 5, 2, 0.2, 8);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.y, b.y);
  EXPECT_NE(a.x, SynthDataset(100, 5, 2, 0.2, 9).x);
  EXPECT_THROW(SynthDataset(100, 5, 6, 0.2, 8), InvalidArgument);
  EXPECT_THROW(SynthDataset(100, 1, 1, 0.2, 8), InvalidArgument);
}

TEST(EncodedCsvTest, RoundTripIsBitExact) {
  const EncodedDataset ds = SynthDataset(50, 4, 2, 0.3, 3);
  const std::string text = EncodedToCsv(ds);
  const EncodedDataset back = EncodedFromCsv(text, 2);
  EXPECT_EQ(back.x, ds.x);
  EXPECT_EQ(back.y, ds.y);
  EXPECT_EQ(back.feature_names, ds.feature_names);
  EXPECT_EQ(EncodedToCsv(back), text);
  EXPECT_THROW(EncodedFromCsv("a,b\n1,2\n", 2), DataError);
  EXPECT_THROW(EncodedFromCsv("a,label\n1,5\n", 2), DataError);
}

TEST(TieGroupedOrderTest, ValidateCovers) {
  TieGroupedOrder ok{{{2}, {0, 1}}};
  EXPECT_NO_THROW(ok.ValidateCovers(3));
  EXPECT_EQ(ok.num_features(), 3u);
  EXPECT_THROW(ok.ValidateCovers(4), InvalidArgument);
  TieGroupedOrder repeated{{{0}, {0, 1}}};
  EXPECT_THROW(repeated.ValidateCovers(2), InvalidArgument);
}

TEST(TitanicTest, BundledFileEncodesToEightFeatures) {
  const std::filesystem::path path = DataDir() / "titanic.csv";
  if (!std::filesystem::exists(path)) GTEST_SKIP() << "no " << path;
  const RawTable raw = LoadCsv(path, "survived");
  EXPECT_EQ(raw.num_rows(), 1309u);
  const RawTable clean = DropMissing(raw);
  EXPECT_EQ(clean.num_rows(), 1046u);
  const EncoderSpec spec = FitEncoder(clean);
  EXPECT_EQ(spec.num_features(), 8u);
  EXPECT_EQ(spec.num_classes(), 2);
}

}  // namespace
}  // namespace ifenet
