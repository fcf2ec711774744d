#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "nli/io/checkpoint.hpp"
#include "nli/text/vocabulary.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;

namespace nli {
namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  fs::path dir;

  void SetUp() override {
    dir = fs::temp_directory_path() / ("nli_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    unsetenv(cli::kOutputDirEnv);
  }
  void TearDown() override { unsetenv(cli::kOutputDirEnv); }

  fs::path write(const std::string& name, const std::string& content) {
    std::ofstream(dir / name, std::ios::binary) << content;
    return dir / name;
  }

  fs::path write_snli(const std::string& name, std::size_t n, std::uint64_t seed) {
    std::string lines;
    for (const auto& ex : testing::marker_dataset(n, seed)) {
      lines += R"({"gold_label": ")" + std::string(label_name(ex.gold_label)) + R"(", "sentence1": ")" + ex.premise +
               R"(", "sentence2": ")" + ex.hypothesis + "\"}\n";
    }
    lines += R"({"gold_label": "-", "sentence1": "no", "sentence2": "consensus"})" "\n";
    return write(name, lines);
  }

  // Toy checkpoint and vocabulary written directly.
  fs::path make_checkpoint() {
    const std::vector<NliExample> corpus = {{"the seller shall pay", "the seller may pay", NliLabel::kNeutral}};
    const Vocabulary vocab = build_vocab(corpus);
    const ModelConfig cfg = testing::tiny_config(1, 2, 8, 16, vocab.size());
    save_checkpoint(cfg, ModelParameters<float>::initialize(cfg, 1), CheckpointMeta{vocab.fingerprint(), 0, 0, 1},
                    dir / "checkpoint.bin");
    vocab.save(dir / "vocab.txt");
    return dir / "checkpoint.bin";
  }
};

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}).code, cli::kUsage);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kUsage);
  const CliResult r = run({"infer", "--bogus"});
  EXPECT_EQ(r.code, cli::kUsage);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_EQ(run({"--help"}).code, cli::kSuccess);
}

TEST_F(CliTest, InspectFullConfig) {
  const CliResult r = run({"inspect", "--config", (fs::path(NLI_SOURCE_DIR) / "configs/full.cfg").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("parameters_analytic\t21911763"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("parameters_enumerated\t21911763"), std::string::npos);
  EXPECT_NE(r.out.find("n_blocks = 12"), std::string::npos);
}

TEST_F(CliTest, InspectRejectsUnknownKey) {
  const CliResult r = run({"inspect", "--config", write("bad.cfg", "n_blockz = 3\n").string()});
  EXPECT_EQ(r.code, cli::kUsage);
  EXPECT_NE(r.err.find("n_blockz"), std::string::npos);
}

TEST_F(CliTest, InferPrintsThreeProbabilities) {
  const fs::path ckpt = make_checkpoint();
  const CliResult r = run({"infer", "--checkpoint", ckpt.string(), "--premise", "The seller shall pay.", "--hypothesis",
                     "The seller may pay."});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* label : {"entailment\t", "contradiction\t", "neutral\t", "predicted\t"}) {
    EXPECT_NE(r.out.find(label), std::string::npos) << r.out;
  }
}

TEST_F(CliTest, TruncatedCheckpointIsDataError) {
  const fs::path ckpt = make_checkpoint();
  fs::resize_file(ckpt, fs::file_size(ckpt) - 100);
  const CliResult r = run({"infer", "--checkpoint", ckpt.string(), "--premise", "a", "--hypothesis", "b"});
  EXPECT_EQ(r.code, cli::kDataError);
  EXPECT_NE(r.err.find("section"), std::string::npos) << r.err;
}

TEST_F(CliTest, MismatchedVocabularyIsDataError) {
  const fs::path ckpt = make_checkpoint();
  Vocabulary(std::vector<std::string>{"other"}).save(dir / "other_vocab.txt");
  const CliResult r = run({"infer", "--checkpoint", ckpt.string(), "--vocab", (dir / "other_vocab.txt").string(),
                     "--premise", "a", "--hypothesis", "b"});
  EXPECT_EQ(r.code, cli::kDataError);
}

TEST_F(CliTest, AnalyzeConflictsWritesReportsHonouringEnv) {
  const fs::path ckpt = make_checkpoint();
  const fs::path conflicts = write("c.tsv", "The seller shall pay.\tThe seller may pay.\tdeontic-modality\n");
  const fs::path env_out = dir / "from_env";
  setenv(cli::kOutputDirEnv, env_out.string().c_str(), 1);
  CliResult r = run({"analyze-conflicts", "--checkpoint", ckpt.string(), "--conflicts", conflicts.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(env_out / "conflict_report.tsv"));
  EXPECT_TRUE(fs::exists(env_out / "conflict_report.txt"));

  const fs::path flag_out = dir / "from_flag";
  r = run({"analyze-conflicts", "--checkpoint", ckpt.string(), "--conflicts", conflicts.string(), "--output-dir",
           flag_out.string(), "--format", "tsv"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(flag_out / "conflict_report.tsv"));
  EXPECT_EQ(r.out.rfind("type\tnorm_a", 0), 0u);
}

TEST_F(CliTest, AnalyzeConflictsUnknownTypeIsDataError) {
  const fs::path ckpt = make_checkpoint();
  const CliResult r = run({"analyze-conflicts", "--checkpoint", ckpt.string(), "--conflicts",
                     write("c.tsv", "a\tb\ttemporal\n").string(), "--output-dir", (dir / "o").string()});
  EXPECT_EQ(r.code, cli::kDataError);
  EXPECT_NE(r.err.find("temporal"), std::string::npos);
}

TEST_F(CliTest, TrainMissingDatasetIsConfigError) {
  const CliResult r = run({"train", "--config", write("t.cfg", "n_blocks = 1\n").string()});
  EXPECT_EQ(r.code, cli::kUsage);
  EXPECT_NE(r.err.find("snli_train"), std::string::npos);
}

TEST_F(CliTest, TrainEvalInferPipeline) {
  const fs::path train = write_snli("train.jsonl", 48, 1);
  const fs::path dev = write_snli("dev.jsonl", 12, 2);
  const fs::path cfg = write("toy.cfg", "n_blocks = 1\nn_heads = 2\nd_model = 16\nd_ffn = 32\nmax_len = 32\n"
                                        "base_lr = 1e-3\nmax_epochs = 3\nbatch_size = 8\n"
                                        "snli_train = \"" + train.string() + "\"\nsnli_dev = \"" + dev.string() +
                                        "\"\noutput_dir = \"" + (dir / "cfg_out").string() + "\"\n");
  const fs::path out = dir / "run";
  CliResult r = run({"train", "--config", cfg.string(), "--output-dir", out.string()});
  ASSERT_EQ(r.code, 0) << r.err << r.out;
  for (const char* f : {"checkpoint.bin", "vocab.txt", "train_log.csv", "run_config.cfg"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  EXPECT_FALSE(fs::exists(dir / "cfg_out"));
  EXPECT_NE(r.out.find("1 without consensus"), std::string::npos) << r.out;
  std::ifstream log(out / "train_log.csv");
  std::size_t lines = 0;
  for (std::string l; std::getline(log, l);) ++lines;
  EXPECT_EQ(lines, 4u);

  r = run({"eval", "--checkpoint", (out / "checkpoint.bin").string(), "--data", dev.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("examples\t12"), std::string::npos) << r.out;

  r = run({"inspect", "--checkpoint", (out / "checkpoint.bin").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("n_blocks=1"), std::string::npos);

  // Same seed, same data: byte-identical checkpoint.
  const fs::path out2 = dir / "run2";
  ASSERT_EQ(run({"train", "--config", cfg.string(), "--output-dir", out2.string()}).code, 0);
  std::ifstream a(out / "checkpoint.bin", std::ios::binary), b(out2 / "checkpoint.bin", std::ios::binary);
  EXPECT_EQ(std::string(std::istreambuf_iterator<char>(a), {}), std::string(std::istreambuf_iterator<char>(b), {}));
}

}  // namespace
}  // namespace nli
