#include <cstdlib>
#include <fstream>
#include <regex>

#include "blade/llm.hpp"
#include "httplib.h"
#include "json.hpp"

namespace blade {

namespace {

std::string env_or(const char* name, std::string fallback = {}) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : fallback;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw LlmError("cannot write " + p.string());
  out << text;
}

}  // namespace

HttpClientConfig HttpClientConfig::from_env() {
  HttpClientConfig c;
  c.endpoint = env_or("BLADE_LLM_ENDPOINT");
  c.api_key = env_or("BLADE_LLM_API_KEY");
  c.model = env_or("BLADE_LLM_MODEL", "gpt-4");
  return c;
}

HttpClient::HttpClient(HttpClientConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.endpoint.empty()) throw LlmError("BLADE_LLM_ENDPOINT is not set");
}

std::string HttpClient::complete(const PromptBundle& prompt, std::size_t attempt) {
  static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(cfg_.endpoint, m, url)) throw LlmError("bad endpoint URL " + cfg_.endpoint);
  std::string base = m[1].str(), path = m[2].matched ? m[2].str() : "/";

  nlohmann::json req{{"model", cfg_.model},
                     {"messages",
                      {{{"role", "system"}, {"content", prompt.system_text()}},
                       {{"role", "user"}, {"content", prompt.user_part}}}}};
  if (cfg_.temperature) req["temperature"] = *cfg_.temperature;

  httplib::Client cli(base);
  cli.set_read_timeout(cfg_.timeout_seconds, 0);
  httplib::Headers headers;
  if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);
  auto res = cli.Post(path, headers, req.dump(), "application/json");
  if (!res) throw LlmError("request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw LlmError("endpoint returned status " + std::to_string(res->status));

  std::string text;
  try {
    auto body = nlohmann::json::parse(res->body);
    text = body.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const std::exception& e) {
    throw LlmError(std::string("unexpected response payload: ") + e.what());
  }
  if (cfg_.record_root) {
    auto dir = *cfg_.record_root / cfg_.domain / prompt.behavior;
    write_file(dir / (std::to_string(attempt) + ".txt"), text);
    write_file(dir / (std::to_string(attempt) + ".request.json"), req.dump(2));
  }
  return text;
}

}  // namespace blade
