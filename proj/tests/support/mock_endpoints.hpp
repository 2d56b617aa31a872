#pragma once

// In-process HTTP mocks speaking the chat-completions and embeddings wire
// shapes, plus canned responders for the end-to-end tests.

#include <atomic>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "syllogic/lexicon.hpp"
#include "syllogic/logic.hpp"

namespace mock {

using ChatResponder = std::function<std::string(const std::string& prompt)>;

class ChatServer {
 public:
  explicit ChatServer(ChatResponder responder) : responder_(std::move(responder)) {
    server_.Post("/v1/chat/completions",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   // Tickets make the success budget exact under concurrency.
                   const int ticket = requests_.fetch_add(1);
                   const int budget = successes_allowed_.load();
                   if (budget >= 0 && ticket >= budget) {
                     res.status = failure_status_.load();
                     return;
                   }
                   last_auth_ = req.get_header_value("Authorization");
                   const auto body = nlohmann::json::parse(req.body);
                   const std::string prompt =
                       body.at("messages").at(0).at("content").get<std::string>();
                   served_.fetch_add(1);
                   {
                     std::lock_guard<std::mutex> lock(raw_mutex_);
                     if (!raw_response_.empty()) {
                       res.set_content(raw_response_, "application/json");
                       return;
                     }
                   }
                   const nlohmann::json out{
                       {"choices",
                        nlohmann::json::array(
                            {{{"message", {{"role", "assistant"},
                                           {"content", responder_(prompt)}}}}})}};
                   res.set_content(out.dump(), "application/json");
                 });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~ChatServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int requests() const { return requests_.load(); }
  int served() const { return served_.load(); }
  std::string last_auth() const { return last_auth_; }

  // Admit `n` more requests, then answer failure_status until lifted.
  void fail_after(int n) { successes_allowed_.store(requests_.load() + n); }
  void recover() { successes_allowed_.store(-1); }
  void set_failure_status(int status) { failure_status_.store(status); }

  // When nonempty, successful requests return this body verbatim.
  void set_raw_response(const std::string& raw) {
    std::lock_guard<std::mutex> lock(raw_mutex_);
    raw_response_ = raw;
  }

 private:
  ChatResponder responder_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
  std::atomic<int> served_{0};
  std::atomic<int> successes_allowed_{-1};
  std::atomic<int> failure_status_{500};
  std::mutex raw_mutex_;
  std::string raw_response_;
  std::string last_auth_;
};

using Embedder = std::function<std::vector<double>(const std::string& text)>;

class EmbedServer {
 public:
  explicit EmbedServer(Embedder embedder) : embedder_(std::move(embedder)) {
    server_.Post("/v1/embeddings",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   requests_.fetch_add(1);
                   const auto body = nlohmann::json::parse(req.body);
                   const std::string input = body.at("input").get<std::string>();
                   const nlohmann::json out{
                       {"data", nlohmann::json::array(
                                    {{{"embedding", embedder_(input)}}})}};
                   res.set_content(out.dump(), "application/json");
                 });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~EmbedServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int requests() const { return requests_.load(); }

 private:
  Embedder embedder_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
};

// Machine-translation mock: POST /translate {text, source, target} ->
// {translation}. Point clients at url() + "/translate".
class MtServer {
 public:
  using Translator = std::function<std::string(const std::string& text,
                                               const std::string& source,
                                               const std::string& target)>;

  explicit MtServer(Translator translator) : translator_(std::move(translator)) {
    server_.Post("/translate", [this](const httplib::Request& req, httplib::Response& res) {
      const auto body = nlohmann::json::parse(req.body);
      const nlohmann::json out{
          {"translation", translator_(body.at("text").get<std::string>(),
                                      body.at("source").get<std::string>(),
                                      body.at("target").get<std::string>())}};
      res.set_content(out.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~MtServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  Translator translator_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

// Extracts the text after `field` on its line of the prompt, e.g.
// field = "Premise: ".
inline std::string prompt_field(const std::string& prompt, const std::string& field) {
  const std::size_t start = prompt.find(field);
  if (start == std::string::npos) return "";
  const std::size_t from = start + field.size();
  const std::size_t end = prompt.find('\n', from);
  return prompt.substr(from, end == std::string::npos ? std::string::npos : end - from);
}

// Answers with the logic oracle's label: round-trips both sentences through
// the lexicon parser and classifies the recovered statements.
inline mock::ChatResponder oracle_responder(const syllogic::Lexicon& lexicon) {
  return [&lexicon](const std::string& prompt) -> std::string {
    const auto premise =
        syllogic::parse_statement_any(prompt_field(prompt, "Premise: "), lexicon);
    const auto hypothesis =
        syllogic::parse_statement_any(prompt_field(prompt, "Hypothesis: "), lexicon);
    if (!premise || !hypothesis) return "unparseable";
    switch (syllogic::classify_pair(*premise, *hypothesis)) {
      case syllogic::Label::Entailment: return "Entailment";
      case syllogic::Label::Contradiction: return "Contradiction";
      case syllogic::Label::Neutral: return "Neutral";
    }
    return "unparseable";
  };
}

}  // namespace mock
