#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "synbd/dataset.h"
#include "synbd/ngram_lm.h"
#include "synbd/treebank.h"

namespace synbd {

enum class Provenance { kBuiltinRule, kExternal };

struct ParaphraseCandidate {
  std::string text;
  // Always present for built-in rewrites (yield == text). External
  // candidates without a parseable tree are rejected before reaching here.
  ParseTree tree;
  std::string source_id;
  Provenance provenance = Provenance::kBuiltinRule;

  SyntacticTemplate syntactic_template() const {
    return extract_template(tree);
  }
};

// Either a candidate or the reason no candidate was produced.
struct RewriteOutcome {
  std::optional<ParaphraseCandidate> candidate;
  std::string reason;

  bool ok() const { return candidate.has_value(); }
  static RewriteOutcome reject(std::string why) { return {std::nullopt, std::move(why)}; }
};

inline const SyntacticTemplate& fronted_clause_template() {
  static const SyntacticTemplate t{"S", {"SBAR", ",", "NP", "VP", "."}};
  return t;
}
inline const SyntacticTemplate& plain_clause_template() {
  static const SyntacticTemplate t{"S", {"NP", "VP", "."}};
  return t;
}

// Subordinate clause prefixed when a sentence has nothing to front.
struct FallbackClause {
  std::vector<std::string> tokens;
  ParseTree tree;  // SBAR
};
// "as we all know", (SBAR (IN as) (S (NP (PRP we)) (ADVP (DT all)) (VP (VBP know))))
const FallbackClause& default_fallback_clause();

const std::vector<std::string>& subordinators();

// Rewrites a declarative S into S(SBAR)(,)(NP)(VP)(.).
//
// Detachment search: the rightmost SBAR child of the root that is the last
// constituent before the final punctuation, then the SBAR ending the VP spine
// (root VP, then its last VP child, recursively). The SBAR must open with a
// subordinator. If nothing is detachable, `fallback` is prefixed. Casing: the
// new first token is capitalized iff the old first token was; the old first
// token is lowercased unless it looks like a proper noun ("I", or seen
// capitalized elsewhere in the sentence). Input already in the target
// template is returned unchanged.
RewriteOutcome clause_front(const ParseTree& tree,
                            const FallbackClause& fallback = default_fallback_clause(),
                            const std::string& source_id = {});

// Inverse rewrite toward S(NP)(VP)(.): a fronted SBAR is moved to the end of
// the VP spine, or deleted when it is the fallback clause. Any other tree is
// returned unchanged (the outcome still carries a candidate).
RewriteOutcome clause_unfront(const ParseTree& tree,
                              const FallbackClause& fallback = default_fallback_clause(),
                              const std::string& source_id = {});

struct OverlapVerdict {
  bool accept = true;
  std::string reason;
};

// Rejects candidates that (a) equal the source, (b) repeat a non-punctuation
// token more than max(2, source count) times, or (c) repeat a trigram.
// Comparison is case-insensitive.
OverlapVerdict overlap_filter(std::span<const std::string> source,
                              std::span<const std::string> candidate);

// Indices (into `candidates`, ascending) whose perplexity is finite and
// <= mean + 2 * stddev.
std::vector<std::size_t> ppl_filter(const PerplexityScorer& scorer,
                                    const std::vector<std::vector<std::string>>& candidates,
                                    double mean, double stddev);
bool ppl_accept(double ppl, double mean, double stddev);

struct ParaphraserSpec {
  enum class Kind { kBuiltin, kExternal };
  Kind kind = Kind::kBuiltin;
  SyntacticTemplate target_template = fronted_clause_template();
  std::string external_command;

  void validate() const;  // external kind requires a command
};

// Source of syntactically controlled paraphrases for a batch of samples.
// Results are index-aligned with the input.
class Paraphraser {
 public:
  virtual ~Paraphraser() = default;
  virtual std::vector<std::vector<RewriteOutcome>> paraphrase(
      std::span<const LabeledSample> batch, const SyntacticTemplate& target) = 0;
  virtual bool supports(const SyntacticTemplate& target) const = 0;
};

// Tree rewriting; supports S(SBAR)(,)(NP)(VP)(.) and S(NP)(VP)(.).
class BuiltinParaphraser : public Paraphraser {
 public:
  explicit BuiltinParaphraser(FallbackClause fallback = default_fallback_clause())
      : fallback_(std::move(fallback)) {}
  std::vector<std::vector<RewriteOutcome>> paraphrase(
      std::span<const LabeledSample> batch, const SyntacticTemplate& target) override;
  bool supports(const SyntacticTemplate& target) const override;

 private:
  FallbackClause fallback_;
};

// Adapter-backed paraphraser. Candidates lacking a parseable tree are
// rejected; item errors become per-sample rejections.
class ExternalParaphraser : public Paraphraser {
 public:
  explicit ExternalParaphraser(std::string command) : command_(std::move(command)) {}
  std::vector<std::vector<RewriteOutcome>> paraphrase(
      std::span<const LabeledSample> batch, const SyntacticTemplate& target) override;
  bool supports(const SyntacticTemplate&) const override { return true; }

 private:
  std::string command_;
};

std::vector<std::vector<RewriteOutcome>> external_paraphrase(
    const ParaphraserSpec& spec, std::span<const LabeledSample> batch);

std::unique_ptr<Paraphraser> make_paraphraser(const ParaphraserSpec& spec);

}  // namespace synbd
