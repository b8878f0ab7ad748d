#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "synbd/dataset.h"
#include "synbd/error.h"
#include "synbd/text.h"

namespace synbd {
namespace {

using Tokens = std::vector<std::string>;

TEST(Text, SplitDetachesTrailingPunctuation) {
  EXPECT_EQ(split_surface("The movie is great."), (Tokens{"The", "movie", "is", "great", "."}));
  EXPECT_EQ(split_surface("  wait,  what?!  "), (Tokens{"wait", ",", "what", "?", "!"}));
  EXPECT_EQ(split_surface("... ok"), (Tokens{"...", "ok"}));
  EXPECT_TRUE(split_surface("").empty());
}

TEST(Text, TokenizeLowercases) {
  EXPECT_EQ(tokenize("As We all KNOW, I"), (Tokens{"as", "we", "all", "know", ",", "i"}));
}

TEST(Text, Helpers) {
  EXPECT_TRUE(is_punct_token(","));
  EXPECT_TRUE(is_punct_token("..."));
  EXPECT_FALSE(is_punct_token("n't"));
  EXPECT_FALSE(is_punct_token(""));
  EXPECT_EQ(capitalize("because"), "Because");
  EXPECT_TRUE(starts_upper("It"));
  EXPECT_EQ(join({"a", "b", "c"}), "a b c");
  EXPECT_EQ(detokenize({"It", "does", "n't", "matter", ",", "ok", "."}), "It doesn't matter, ok.");
}

constexpr const char* kTwo =
    "{\"id\": \"a\", \"text\": \"good film .\", \"label\": \"positive\"}\n"
    "{\"id\": \"b\", \"text\": \"bad film .\", \"label\": \"negative\", "
    "\"tree\": \"(NP (NP (JJ bad) (NN film)) (. .))\"}\n";

TEST(Dataset, ParsesWellFormedLines) {
  const Dataset d = parse_dataset(kTwo);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.labels(), (Tokens{"negative", "positive"}));
  EXPECT_EQ(d[0].id, "a");
  EXPECT_FALSE(d[0].tree.has_value());
  ASSERT_TRUE(d[1].tree.has_value());
  EXPECT_EQ(linearize(*d[1].tree), "NP(NP(JJ)(NN))(.)");
  EXPECT_EQ(d.label_index("positive"), 1u);
}

TEST(Dataset, DeclaredLabelOrderIsKept) {
  const Dataset d = parse_dataset(kTwo, {"positive", "negative"});
  EXPECT_EQ(d.label_index("positive"), 0u);
}

std::string error_of(const std::string& jsonl, const Tokens& labels = {}) {
  try {
    parse_dataset(jsonl, labels);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

TEST(Dataset, ErrorsCarryLineNumbers) {
  EXPECT_EQ(error_of("{\"id\": \"a\", \"text\": \"x\", \"label\": \"p\"}\n{\"id\": \"b\", \"text\": \"y\"}\n"),
            "line 2: missing \"label\"");
  EXPECT_NE(error_of("{\"id\": \"a\", \"text\": \"x\", \"label\": \"p\"}\n"
                     "{\"id\": \"a\", \"text\": \"y\", \"label\": \"p\"}\n")
                .find("line 2: duplicate id"),
            std::string::npos);
  EXPECT_NE(error_of(kTwo, {"positive"}).find("line 2: unknown label"), std::string::npos);
  EXPECT_NE(error_of("not json\n").find("line 1: invalid JSON"), std::string::npos);
  EXPECT_NE(error_of("{\"id\": \"a\", \"text\": \"x\", \"label\": \"p\", \"tree\": \"(S (NP\"}\n")
                .find("line 1: bad tree"),
            std::string::npos);
  EXPECT_NE(error_of("{\"id\": \"a\", \"text\": \"x\", \"label\": \"p\", \"extra\": 1}\n")
                .find("unexpected key"),
            std::string::npos);
  EXPECT_NE(error_of("\n\n").find("no samples"), std::string::npos);
}

TEST(Dataset, SaveLoadReachesFixpoint) {
  const auto dir = std::filesystem::temp_directory_path() / "synbd_dataset_test";
  std::filesystem::create_directories(dir);
  // Non-canonical spacing and key order in the source file.
  const std::string src =
      "{\"label\":\"positive\",\"text\":\"good film .\",\"id\":\"a\"}\n"
      "{\"id\":\"b\",\"text\":\"bad film .\",\"label\":\"negative\","
      "\"tree\":\"(NP\\n  (NP (JJ bad) (NN film))\\n  (. .))\"}\n";
  {
    std::ofstream f(dir / "in.jsonl", std::ios::binary);
    f << src;
  }
  const Dataset once = load_dataset(dir / "in.jsonl");
  save_dataset(once, dir / "once.jsonl");
  const Dataset twice = load_dataset(dir / "once.jsonl");
  save_dataset(twice, dir / "twice.jsonl");
  EXPECT_EQ(once, twice);
  const auto slurp = [](const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };
  EXPECT_EQ(slurp(dir / "once.jsonl"), slurp(dir / "twice.jsonl"));
  EXPECT_NE(slurp(dir / "in.jsonl"), slurp(dir / "once.jsonl"));
  std::filesystem::remove_all(dir);
}

TEST(Dataset, ConstructorValidates) {
  LabeledSample s{"x", "t", "p", std::nullopt};
  EXPECT_THROW(Dataset({}, {"p"}), DataError);
  EXPECT_THROW(Dataset({s, s}, {"p"}), DataError);
  EXPECT_THROW(Dataset({s}, {"q"}), DataError);
  const Dataset d({s}, {"p"});
  EXPECT_TRUE(d.with_samples({}).empty());
  EXPECT_EQ(d.with_samples({}).labels(), (Tokens{"p"}));
}

TEST(Dataset, TokenCorpus) {
  const auto corpus = token_corpus(parse_dataset(kTwo));
  EXPECT_EQ(corpus[1], (Tokens{"bad", "film", "."}));
}

}  // namespace
}  // namespace synbd
