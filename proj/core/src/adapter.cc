#include "synbd/adapter.h"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

#include "json.hpp"
#include "synbd/error.h"
#include "synbd/text.h"

namespace synbd {

using json = nlohmann::json;

namespace {

std::string errno_text() { return std::strerror(errno); }

}  // namespace

ChildProcess::ChildProcess(const std::string& command) {
  if (command.empty()) throw AdapterError("adapter command is empty");
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
    throw AdapterError("socketpair failed: " + errno_text());
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(fds[0]);
    ::close(fds[1]);
    throw AdapterError("fork failed: " + errno_text());
  }
  if (pid == 0) {
    ::dup2(fds[1], STDIN_FILENO);
    ::dup2(fds[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(fds[1]);
  pid_ = pid;
  fd_ = fds[0];
}

ChildProcess::~ChildProcess() {
  if (pid_ > 0) close(std::chrono::milliseconds(0));
}

ChildProcess::ChildProcess(ChildProcess&& other) noexcept
    : pid_(other.pid_), fd_(other.fd_), input_closed_(other.input_closed_),
      buffer_(std::move(other.buffer_)) {
  other.pid_ = -1;
  other.fd_ = -1;
}

ChildProcess& ChildProcess::operator=(ChildProcess&& other) noexcept {
  if (this != &other) {
    if (pid_ > 0) close(std::chrono::milliseconds(0));
    pid_ = other.pid_;
    fd_ = other.fd_;
    input_closed_ = other.input_closed_;
    buffer_ = std::move(other.buffer_);
    other.pid_ = -1;
    other.fd_ = -1;
  }
  return *this;
}

void ChildProcess::write_line(const std::string& line) {
  if (fd_ < 0 || input_closed_) throw AdapterError("adapter input is closed");
  std::string data = line;
  data += '\n';
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw AdapterError("adapter write failed: " + errno_text());
    }
    off += static_cast<std::size_t>(n);
  }
}

std::optional<std::string> ChildProcess::read_line() {
  if (fd_ < 0) return std::nullopt;
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    char chunk[4096];
    const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw AdapterError("adapter read failed: " + errno_text());
    }
    if (n == 0) return std::nullopt;
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

int ChildProcess::close(std::chrono::milliseconds grace) {
  if (pid_ <= 0) return -1;
  if (fd_ >= 0 && !input_closed_) {
    ::shutdown(fd_, SHUT_WR);
    input_closed_ = true;
  }
  int status = 0;
  int result = -1;
  const auto deadline = std::chrono::steady_clock::now() + grace;
  for (;;) {
    const pid_t r = ::waitpid(pid_, &status, WNOHANG);
    if (r == pid_) {
      result = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
      break;
    }
    if (r < 0 && errno != EINTR) break;
    if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
      result = -1;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
  pid_ = -1;
  return result;
}

AdapterClient::AdapterClient(const std::string& command) : process_(command) {}

AdapterClient::~AdapterClient() {
  try {
    shutdown();
  } catch (...) {
  }
}

int AdapterClient::shutdown() {
  if (!exit_status_) exit_status_ = process_.close();
  return *exit_status_;
}

std::string AdapterClient::roundtrip(const std::string& request, std::int64_t id) {
  if (exit_status_) throw AdapterError("adapter already shut down");
  process_.write_line(request);
  auto line = process_.read_line();
  if (!line) throw AdapterError("adapter closed its output before answering id " + std::to_string(id));
  json reply;
  try {
    reply = json::parse(*line);
  } catch (const json::parse_error&) {
    throw AdapterError("protocol violation: malformed response line: " + line->substr(0, 200));
  }
  if (!reply.is_object() || !reply.contains("id") || !reply["id"].is_number_integer()) {
    throw AdapterError("protocol violation: response without integer id");
  }
  if (reply["id"].get<std::int64_t>() != id) {
    throw AdapterError("protocol violation: expected id " + std::to_string(id) + ", got " +
                       std::to_string(reply["id"].get<std::int64_t>()));
  }
  return *line;
}

ParaphraseReply AdapterClient::paraphrase(const std::string& text,
                                          const std::string& template_string) {
  const std::int64_t id = next_id_++;
  json req = {{"id", id}, {"op", "paraphrase"}, {"text", text}, {"template", template_string}};
  json reply = json::parse(roundtrip(req.dump(), id));
  if (reply.contains("error")) {
    return AdapterItemError{reply["error"].is_string() ? reply["error"].get<std::string>()
                                                       : reply["error"].dump()};
  }
  if (!reply.contains("paraphrases") || !reply["paraphrases"].is_array()) {
    throw AdapterError("protocol violation: paraphrase response for id " + std::to_string(id) +
                       " has neither \"paraphrases\" nor \"error\"");
  }
  std::vector<AdapterParaphrase> out;
  for (const auto& p : reply["paraphrases"]) {
    if (!p.is_object() || !p.contains("text") || !p["text"].is_string()) {
      throw AdapterError("protocol violation: paraphrase entry without text (id " +
                         std::to_string(id) + ")");
    }
    AdapterParaphrase ap;
    ap.text = p["text"].get<std::string>();
    if (p.contains("tree") && p["tree"].is_string()) ap.tree = p["tree"].get<std::string>();
    out.push_back(std::move(ap));
  }
  return out;
}

ScoreReply AdapterClient::score(const std::string& text) {
  const std::int64_t id = next_id_++;
  json req = {{"id", id}, {"op", "score"}, {"text", text}};
  json reply = json::parse(roundtrip(req.dump(), id));
  if (reply.contains("error")) {
    return AdapterItemError{reply["error"].is_string() ? reply["error"].get<std::string>()
                                                       : reply["error"].dump()};
  }
  if (!reply.contains("ppl") || !reply["ppl"].is_number()) {
    throw AdapterError("protocol violation: score response for id " + std::to_string(id) +
                       " has neither \"ppl\" nor \"error\"");
  }
  return reply["ppl"].get<double>();
}

AdapterScorer::AdapterScorer(const std::string& command) : client_(command) {}

double AdapterScorer::perplexity(std::span<const std::string> tokens) const {
  auto reply = client_.score(join({tokens.begin(), tokens.end()}));
  if (auto* err = std::get_if<AdapterItemError>(&reply)) {
    throw AdapterError("adapter could not score text: " + err->message);
  }
  return std::get<double>(reply);
}

}  // namespace synbd
