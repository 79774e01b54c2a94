// SPDX-License-Identifier: Apache-2.0
#include "fidl/ledger.h"

#include <fstream>
#include <thread>

#include <gtest/gtest.h>

#include "corpus.h"
#include "fidl/error.h"
#include "frozen_values.h"

namespace fidl {
namespace {

ScalingRun DeepfakeScalingFixture() {
  ScalingRun run;
  run.run_id = "deepfake-plus-scaledf";
  run.base_manifest = "stage2_shape.jsonl";
  run.added_domain = Domain::kDeepfake;
  run.added_count = 14000000;
  run.base_domain_sizes = {{Domain::kDeepfake, 2336000}};
  run.base_metric = {{Domain::kDeepfake, 1.0}};
  run.per_domain_metric = {{Domain::kDeepfake, 0.951}};
  return run;
}

class LedgerTest : public ::testing::Test {
 protected:
  void SetUp() override { dir_ = testing::MakeTempDir("fidl-ledger"); }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

TEST(RelativeGainTest, Arithmetic) {
  EXPECT_NEAR(RelativeGain(0.80, 0.88), 10.0, 1e-12);
  EXPECT_DOUBLE_EQ(RelativeGain(0.5, 0.5), 0.0);
  try {
    RelativeGain(0.0, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDomain);
  }
}

TEST(VerifyGainsTest, FillsAndChecksGains) {
  ScalingRun run = DeepfakeScalingFixture();
  const ScalingRun verified = VerifyGains(run);
  EXPECT_EQ(verified.relative_gain.at(Domain::kDeepfake),
            frozen::kScalingGainFixture);
  EXPECT_NEAR(verified.relative_gain.at(Domain::kDeepfake), -4.9, 1e-9);

  run.relative_gain[Domain::kDeepfake] = -4.9 + 1e-6;
  try {
    VerifyGains(run);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConsistency);
  }
  run.relative_gain[Domain::kDeepfake] = -4.9;
  EXPECT_NO_THROW(VerifyGains(run));

  ScalingRun missing_base = DeepfakeScalingFixture();
  missing_base.per_domain_metric[Domain::kAigc] = 0.9;
  EXPECT_THROW(VerifyGains(missing_base), Error);
}

TEST(ScalingRunTest, DataSizeAddsToTheTargetDomain) {
  const ScalingRun run = DeepfakeScalingFixture();
  EXPECT_EQ(run.DataSize(Domain::kDeepfake), 16336000u);
  EXPECT_EQ(run.DataSize(Domain::kAigc), 0u);
}

TEST_F(LedgerTest, RecordsAndReloadsExactly) {
  const auto path = dir_ / "ledger.jsonl";
  {
    Ledger ledger(path);
    EXPECT_TRUE(ledger.runs().empty());
    ledger.Record(DeepfakeScalingFixture());
    ScalingRun second;
    second.run_id = "aigc-up";
    second.added_domain = Domain::kAigc;
    second.added_count = 500000;
    second.base_metric = {{Domain::kAigc, 0.80}};
    second.per_domain_metric = {{Domain::kAigc, 0.88}};
    EXPECT_NEAR(ledger.Record(second).relative_gain.at(Domain::kAigc), 10.0, 1e-12);
  }
  Ledger reloaded(path);
  ASSERT_EQ(reloaded.runs().size(), 2u);
  const ScalingRun& run = reloaded.runs()[0];
  EXPECT_EQ(run.relative_gain.at(Domain::kDeepfake), frozen::kScalingGainFixture);
  EXPECT_EQ(run.per_domain_metric.at(Domain::kDeepfake), 0.951);
  EXPECT_EQ(ScalingRunToJsonLine(run),
            ScalingRunToJsonLine(VerifyGains(DeepfakeScalingFixture())));
  EXPECT_EQ(VerifyGains(run).relative_gain, run.relative_gain);
}

TEST_F(LedgerTest, DuplicateRunIdRejected) {
  Ledger ledger(dir_ / "l.jsonl");
  ledger.Record(DeepfakeScalingFixture());
  try {
    ledger.Record(DeepfakeScalingFixture());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIntegrity);
  }
  EXPECT_EQ(ledger.runs().size(), 1u);
}

TEST_F(LedgerTest, TamperedFileFailsVerification) {
  const auto path = dir_ / "l.jsonl";
  ScalingRun run = VerifyGains(DeepfakeScalingFixture());
  run.relative_gain[Domain::kDeepfake] = -5.5;
  std::ofstream(path) << ScalingRunToJsonLine(run) << "\n";
  EXPECT_THROW(Ledger{path}, Error);
}

TEST_F(LedgerTest, ConcurrentAppendsAreSerialized) {
  const auto path = dir_ / "l.jsonl";
  {
    Ledger ledger(path);
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
      threads.emplace_back([&ledger, t] {
        for (int i = 0; i < 25; ++i) {
          ScalingRun run = DeepfakeScalingFixture();
          run.run_id = "r" + std::to_string(t) + "-" + std::to_string(i);
          ledger.Record(run);
        }
      });
    }
    for (auto& th : threads) th.join();
    EXPECT_EQ(ledger.runs().size(), 200u);
  }
  EXPECT_EQ(Ledger(path).runs().size(), 200u);
}

TEST(ScalingRunJsonTest, MalformedLinesAreParseErrors) {
  EXPECT_THROW(ScalingRunFromJsonLine("{", 3), ParseError);
  EXPECT_THROW(ScalingRunFromJsonLine(R"({"run_id":"x","added":{"domain":"moon","count":1}})", 1),
               ParseError);
}

}  // namespace
}  // namespace fidl
