// Copyright 2026 The WLAC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "wlac/model.h"

#include <cmath>
#include <filesystem>
#include <random>

#include "gtest/gtest.h"
#include "test_util.h"
#include "wlac/datagen.h"

namespace wlac {
namespace {

using testing_util::TinyConfig;
using testing_util::TinyTokenizer;

TEST(ModelTest, DecoderInputLayout) {
  const Tokenizer tok = TinyTokenizer();
  const SymbolTable& t = tok.table();
  const DecoderInput in =
      AssembleDecoderInput({"ab"}, {"cd", "e"}, InstructionUnit{{"b", "a"}, {"ba"}}, tok);
  const std::vector<int> expected = {t.SubwordId("ab"), kTipId,          t.CharId("b"),
                                     t.CharId("a"),     kSepId,          t.SubwordId("ba"),
                                     kMaskId,           t.SubwordId("cd"), t.SubwordId("e")};
  EXPECT_EQ(in.ids, expected);
  EXPECT_EQ(in.mask_position, 6u);
  EXPECT_EQ(in.ids[in.mask_position], kMaskId);
  ASSERT_EQ(in.segment_tags.size(), in.ids.size());
  EXPECT_EQ(in.segment_tags[0], Segment::kLeftContext);
  EXPECT_EQ(in.segment_tags[1], Segment::kInstruction);
  EXPECT_EQ(in.segment_tags[6], Segment::kAnchor);
  EXPECT_EQ(in.segment_tags[8], Segment::kRightContext);
  EXPECT_FALSE(in.unknown_char);
}

TEST(ModelTest, InstructionUnitWithoutDecodedPartHasNoSeparator) {
  const Tokenizer tok = TinyTokenizer();
  const DecoderInput in = AssembleDecoderInput({}, {}, InstructionUnit{{"c"}, {}}, tok);
  EXPECT_EQ(in.ids, (std::vector<int>{kTipId, tok.table().CharId("c"), kMaskId}));
}

TEST(ModelTest, UnknownTypedCharacterIsFlagged) {
  const Tokenizer tok = TinyTokenizer();
  const DecoderInput in = AssembleDecoderInput({}, {}, InstructionUnit{{"z"}, {}}, tok);
  EXPECT_TRUE(in.unknown_char);
  EXPECT_EQ(in.ids[1], kUnkId);
}

TEST(ModelTest, DisabledInstructionUnitKeepsOnlyDecodedPart) {
  const Tokenizer tok = TinyTokenizer();
  AssembleOptions off;
  off.use_instruction_unit = false;
  const DecoderInput a = AssembleDecoderInput({}, {}, InstructionUnit{{"c"}, {}}, tok, off);
  EXPECT_EQ(a.ids, (std::vector<int>{kMaskId}));
  const DecoderInput b =
      AssembleDecoderInput({}, {}, InstructionUnit{{"c"}, {"cd"}}, tok, off);
  EXPECT_EQ(b.ids, (std::vector<int>{kSepId, tok.table().SubwordId("cd"), kMaskId}));
}

TEST(ModelTest, WlacExampleTargetsArePiecesThenEow) {
  const Tokenizer tok = TinyTokenizer();
  auto s = std::make_shared<WlacSample>();
  s->x = {"ba"};
  s->w = "abcd";
  s->s = "a";
  const auto rows = ExpandIterativeRows(s, tok.model());
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(MakeWlacExample(rows[0], tok).target, tok.table().SubwordId("ab"));
  EXPECT_EQ(MakeWlacExample(rows[1], tok).target, tok.table().SubwordId("cd"));
  EXPECT_EQ(MakeWlacExample(rows[2], tok).target, kEowId);
  EXPECT_EQ(MakeWlacExample(rows[0], tok).src,
            (std::vector<int>{kBosId, tok.table().SubwordId("ba"), kEosId}));
}

// Packing many rows into one pass must not change any row's loss.
TEST(ModelTest, BatchedLossEqualsMeanOfSingleRowLosses) {
  const Tokenizer tok = TinyTokenizer();
  const ModelParams p = InitParams(TinyConfig(tok.table().size()), 3);
  std::mt19937_64 rng(4);
  const std::vector<std::string> words = {"ab", "cd", "e", "ba", "de", "ea"};
  std::vector<WlacExample> rows;
  for (int i = 0; i < 12; ++i) {
    auto s = std::make_shared<WlacSample>();
    s->x = {words[rng() % 6], words[rng() % 6]};
    if (i % 3 == 0) s->x = {"ab"};  // shared sources are encoded once
    s->w = words[rng() % 6] + words[rng() % 6];
    s->s = s->w.substr(0, 1);
    s->c_l = {words[rng() % 6]};
    for (const auto& r : ExpandIterativeRows(s, tok.model())) rows.push_back(MakeWlacExample(r, tok));
  }
  std::shuffle(rows.begin(), rows.end(), rng);
  double sum = 0;
  for (const auto& r : rows) sum += WlacLoss(p, std::span<const WlacExample>(&r, 1));
  EXPECT_NEAR(WlacLoss(p, rows), sum / static_cast<double>(rows.size()), 1e-5);

  CmlmSample c1 = GenerateCmlmSample({"ab", "e"}, {9, 10, 11, 12}, 0.5, rng);
  CmlmSample c2 = GenerateCmlmSample({"cd"}, {13, 9, 9}, 0.5, rng);
  std::vector<CmlmExample> cm = {MakeCmlmExample(c1, tok), MakeCmlmExample(c2, tok)};
  const double joint = JointLoss(p, rows, cm);
  const double cm_only = [&] {
    Tape t(false);
    return JointLossGraph(t, p, {}, cm, {}).cmlm;
  }();
  EXPECT_NEAR(joint, WlacLoss(p, rows) + cm_only, 1e-5);
}

TEST(ModelTest, AnchorLogitsMatchSingleInputPrediction) {
  const Tokenizer tok = TinyTokenizer();
  const ModelParams p = InitParams(TinyConfig(tok.table().size()), 5);
  const std::vector<int> src = tok.SourceIds({"ab", "cd"});
  const DecoderInput a = AssembleDecoderInput({"e"}, {}, InstructionUnit{{"a"}, {}}, tok);
  const DecoderInput b = AssembleDecoderInput({}, {"de"}, InstructionUnit{{"c"}, {"cd"}}, tok);
  const Tensor memory = EncodeSource(p, src);
  const DecoderInput* both[] = {&a, &b};
  const Tensor logits = AnchorLogits(p, memory, both);
  ASSERT_EQ(logits.rows(), 2u);
  const Tensor one = PredictMaskLogits(p, src, b);
  for (std::size_t j = 0; j < one.size(); ++j) EXPECT_NEAR(logits.at(1, j), one[j], 1e-5);
}

TEST(ModelTest, EmptyBatchesAreRejected) {
  const Tokenizer tok = TinyTokenizer();
  const ModelParams p = InitParams(TinyConfig(tok.table().size()), 5);
  Tape t;
  EXPECT_THROW(JointLossGraph(t, p, {}, {}, {}), ContractError);
}

TEST(ModelTest, TokenizerRoundTripsThroughFiles) {
  const Tokenizer tok = TinyTokenizer();
  const auto dir = std::filesystem::temp_directory_path() / "wlac_model_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "tok.model").string();
  tok.Save(path);
  const auto back = Tokenizer::Load(path);
  EXPECT_TRUE(back->table() == tok.table());
  EXPECT_TRUE(back->model() == tok.model());
  EXPECT_EQ(back->Pieces("abcd"), tok.Pieces("abcd"));
  std::filesystem::remove_all(dir);
}

TEST(ModelTest, WordListClasses) {
  const WordList w({"pear", "apple", "pear"});
  EXPECT_EQ(w.words(), (std::vector<std::string>{"apple", "pear"}));
  EXPECT_EQ(w.num_classes(), 3u);
  EXPECT_EQ(w.ClassOf("pear"), 1);
  EXPECT_EQ(w.ClassOf("fig"), w.oov_class());
}

}  // namespace
}  // namespace wlac
