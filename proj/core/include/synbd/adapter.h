#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "synbd/ngram_lm.h"

namespace synbd {

// A child process started through `/bin/sh -c <command>` whose stdin and
// stdout are connected to this process. stderr is inherited.
class ChildProcess {
 public:
  explicit ChildProcess(const std::string& command);
  ~ChildProcess();
  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;
  ChildProcess(ChildProcess&& other) noexcept;
  ChildProcess& operator=(ChildProcess&& other) noexcept;

  void write_line(const std::string& line);
  // Next LF-terminated line without the terminator; nullopt on EOF.
  std::optional<std::string> read_line();

  // Closes the child's input and waits up to `grace` for it to exit; kills
  // it afterwards. Returns the exit status, or -1 if it had to be killed.
  int close(std::chrono::milliseconds grace = std::chrono::seconds(5));
  bool running() const { return pid_ > 0; }

 private:
  int pid_ = -1;
  int fd_ = -1;
  bool input_closed_ = false;
  std::string buffer_;
};

struct AdapterParaphrase {
  std::string text;
  std::optional<std::string> tree;  // PTB bracket string, if supplied
};

struct AdapterItemError {
  std::string message;
};

using ParaphraseReply =
    std::variant<std::vector<AdapterParaphrase>, AdapterItemError>;
using ScoreReply = std::variant<double, AdapterItemError>;

// Synchronous newline-delimited JSON client, one request in flight.
//
//   request:  {"id": n, "op": "paraphrase", "text": s, "template": t}
//             {"id": n, "op": "score", "text": s}
//   response: {"id": n, "paraphrases": [{"text": s, "tree": ptb}]}
//             {"id": n, "ppl": x}
//             {"id": n, "error": s}
//
// Ids increase from 0. A response with the wrong id, a malformed line, or
// EOF before a response is a protocol violation (AdapterError). An "error"
// response is an item-level failure returned to the caller.
class AdapterClient {
 public:
  explicit AdapterClient(const std::string& command);
  ~AdapterClient();

  ParaphraseReply paraphrase(const std::string& text,
                             const std::string& template_string);
  ScoreReply score(const std::string& text);

  // Closes the stream and waits for exit (5 s grace). Idempotent.
  int shutdown();

 private:
  std::string roundtrip(const std::string& request, std::int64_t id);

  ChildProcess process_;
  std::int64_t next_id_ = 0;
  std::optional<int> exit_status_;
};

// Perplexity through an adapter's "score" op. Item errors are AdapterError.
class AdapterScorer : public PerplexityScorer {
 public:
  explicit AdapterScorer(const std::string& command);
  double perplexity(std::span<const std::string> tokens) const override;

 private:
  mutable AdapterClient client_;
};

}  // namespace synbd
