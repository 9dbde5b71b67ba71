#include "subtag/gateway.hpp"

#include <algorithm>
#include <thread>
#include <unordered_set>

#include <httplib.h>
#include <json.hpp>

#include "subtag/prompting.hpp"
#include "subtag/text.hpp"

namespace subtag {

namespace {

constexpr std::size_t kMaxKeywordBytes = 120;

std::string strip_list_markers(std::string_view s) {
  std::string_view v = trim(s);
  while (true) {
    if (!v.empty() && (v.front() == '-' || v.front() == '*')) {
      v = trim(v.substr(1));
      continue;
    }
    std::size_t digits = 0;
    while (digits < v.size() && v[digits] >= '0' && v[digits] <= '9') ++digits;
    if (digits > 0 && digits < v.size() && v[digits] == '.') {
      v = trim(v.substr(digits + 1));
      continue;
    }
    break;
  }
  return std::string(v);
}

std::string truncate_utf8(std::string s, std::size_t max_bytes) {
  if (s.size() <= max_bytes) return s;
  std::size_t cut = max_bytes;
  // Back off over UTF-8 continuation bytes so no codepoint is split.
  while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xc0) == 0x80) --cut;
  s.resize(cut);
  return s;
}

}  // namespace

std::vector<std::string> parse_keywords(std::string_view completion) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  std::string cur;
  const auto flush = [&] {
    std::string kw = truncate_utf8(strip_list_markers(cur), kMaxKeywordBytes);
    cur.clear();
    if (kw.empty()) return;
    if (seen.insert(ascii_lower(kw)).second) out.push_back(std::move(kw));
  };
  for (char c : completion) {
    if (c == ',' || c == ';' || c == '\n') {
      flush();
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return out;
}

std::optional<int> parse_rank_reply(std::string_view reply) {
  for (std::size_t i = 0; i < reply.size(); ++i) {
    if (reply[i] >= '0' && reply[i] <= '9') {
      long value = 0;
      std::size_t j = i;
      while (j < reply.size() && reply[j] >= '0' && reply[j] <= '9') {
        value = std::min<long>(value * 10 + (reply[j] - '0'), 1000);
        ++j;
      }
      return static_cast<int>(std::clamp<long>(value, 0, 10));
    }
  }
  return std::nullopt;
}

std::string mock_generate(const std::string& prompt, const std::string& query_text,
                          std::uint64_t seed) {
  std::vector<std::string> tokens;
  {
    std::unordered_set<std::string> seen;
    for (auto& t : tokenize(query_text)) {
      const bool alphabetic = std::none_of(t.begin(), t.end(),
                                           [](char c) { return c >= '0' && c <= '9'; });
      if (alphabetic && seen.insert(t).second) tokens.push_back(std::move(t));
    }
  }
  if (tokens.empty()) return {};
  std::sort(tokens.begin(), tokens.end(), [](const std::string& a, const std::string& b) {
    if (a.size() != b.size()) return a.size() > b.size();
    return a < b;
  });
  const std::uint64_t h = splitmix64(seed ^ fnv1a64(prompt) ^ splitmix64(fnv1a64(query_text)));
  const std::size_t count = std::min<std::size_t>(3 + h % 6, tokens.size());
  std::string out;
  for (std::size_t i = 0; i < count; ++i) {
    if (i > 0) out += ", ";
    out += tokens[i];
  }
  return out;
}

int mock_rank(const std::string& text, const std::string& keyword) {
  const auto kw_tokens = tokenize(keyword);
  if (kw_tokens.empty()) return 0;
  const auto text_tokens = tokenize(text);
  const std::unordered_set<std::string> text_set(text_tokens.begin(), text_tokens.end());
  std::size_t present = 0;
  for (const auto& t : kw_tokens) {
    if (text_set.count(t) > 0) ++present;
  }
  const double f = static_cast<double>(present) / static_cast<double>(kw_tokens.size());
  return static_cast<int>(f * 10.0 + 0.5);
}

class Gateway::InFlightSlot {
 public:
  InFlightSlot(std::shared_ptr<Limiter> limiter, int cap) : limiter_(std::move(limiter)) {
    std::unique_lock lock(limiter_->mu);
    limiter_->cv.wait(lock, [&] { return limiter_->in_flight < cap; });
    ++limiter_->in_flight;
  }
  ~InFlightSlot() {
    {
      std::lock_guard lock(limiter_->mu);
      --limiter_->in_flight;
    }
    limiter_->cv.notify_one();
  }

 private:
  std::shared_ptr<Limiter> limiter_;
};

std::shared_ptr<Gateway::Limiter> Gateway::limiter_for(const std::string& model_id) {
  std::lock_guard lock(mu_);
  auto& slot = limiters_[model_id];
  if (!slot) slot = std::make_shared<Limiter>();
  return slot;
}

namespace {

/// Splits "http://host:port/some/path" into client base and path.
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint,
                                                   const std::string& default_path) {
  const auto scheme = endpoint.find("://");
  const auto path_start = scheme == std::string::npos
                              ? endpoint.find('/')
                              : endpoint.find('/', scheme + 3);
  if (path_start == std::string::npos) return {endpoint, default_path};
  return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

std::string extract_completion_text(const std::string& body) {
  const auto j = nlohmann::json::parse(body);
  if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty() &&
      j["choices"][0].contains("text")) {
    return j["choices"][0]["text"].get<std::string>();
  }
  if (j.contains("text") && j["text"].is_string()) {
    return j["text"].get<std::string>();
  }
  throw BackendError("completion response has neither choices[0].text nor text");
}

}  // namespace

std::string Gateway::http_completion(const ModelConfig& cfg, const std::string& prompt) {
  const auto [base, path] = split_endpoint(cfg.endpoint, "/v1/completions");
  nlohmann::json request = {
      {"model", cfg.model_id},
      {"prompt", prompt},
      {"temperature", cfg.temperature},
      {"min_tokens", cfg.min_tokens},
      {"max_tokens", cfg.max_tokens},
  };
  const std::string body = request.dump();

  InFlightSlot slot(limiter_for(cfg.model_id), std::max(1, cfg.max_in_flight));

  const int attempts = std::max(1, cfg.max_retries);
  std::string last_error;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(cfg.retry_backoff * (1 << std::min(attempt - 1, 10)));
    }
    httplib::Client client(base);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(cfg.request_timeout));
    client.set_read_timeout(cfg.request_timeout);
    if (const char* key = std::getenv("SUBTAG_API_KEY")) {
      client.set_bearer_token_auth(key);
    }
    auto res = client.Post(path, body, "application/json");
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "server error " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw BackendError("backend '" + cfg.model_id + "' returned status " +
                         std::to_string(res->status) + ": " + res->body);
    }
    try {
      return extract_completion_text(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw BackendError("backend '" + cfg.model_id + "' sent unparseable JSON: " + e.what());
    }
  }
  throw TransportError("backend '" + cfg.model_id + "' unreachable after " +
                       std::to_string(attempts) + " attempts: " + last_error);
}

std::string Gateway::generate_completion(const ModelConfig& cfg, const std::string& prompt,
                                         const std::string& query_text) {
  completions_requested_.fetch_add(1);
  if (cfg.endpoint == "mock") {
    return mock_generate(prompt, query_text, seed_ ^ fnv1a64(cfg.model_id));
  }
  return http_completion(cfg, prompt);
}

std::optional<int> Gateway::rank_relevance(const ModelConfig& cfg, const std::string& text,
                                           const std::string& subject_label,
                                           const std::string& rank_template) {
  ranks_requested_.fetch_add(1);
  std::string reply;
  if (cfg.endpoint == "mock") {
    // Template is still rendered so placeholder errors surface on mock runs.
    render_template(rank_template, {{"text", text}, {"keyword", subject_label}});
    reply = std::to_string(mock_rank(text, subject_label));
  } else {
    const std::string prompt =
        render_template(rank_template, {{"text", text}, {"keyword", subject_label}});
    reply = http_completion(cfg, prompt);
  }
  return parse_rank_reply(reply);
}

}  // namespace subtag
