#include "lcr/completion_client.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "lcr/errors.hpp"

namespace lcr {

HttpCompletionClient::HttpCompletionClient(std::string endpoint, std::string bearer_token,
                                           int timeout_seconds)
    : token_(std::move(bearer_token)), timeout_(timeout_seconds) {
  const std::string scheme = "http://";
  if (endpoint.rfind(scheme, 0) != 0)
    throw ConfigError("completion endpoint must start with http://, got '" + endpoint + "'");
  const auto slash = endpoint.find('/', scheme.size());
  origin_ = endpoint.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : endpoint.substr(slash);
}

std::string HttpCompletionClient::complete(std::string_view prompt) {
  httplib::Client cli(origin_);
  cli.set_connection_timeout(timeout_);
  cli.set_read_timeout(timeout_);
  httplib::Headers headers;
  if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
  const std::string body = nlohmann::json{{"prompt", std::string(prompt)}}.dump();
  auto res = cli.Post(path_, headers, body, "application/json");
  if (!res) throw IoError("completion request to " + origin_ + path_ + " failed: " +
                          httplib::to_string(res.error()));
  if (res->status != 200)
    throw IoError("completion endpoint returned HTTP " + std::to_string(res->status));
  try {
    return nlohmann::json::parse(res->body).at("text").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("completion reply is not {\"text\": ...}: ") + e.what());
  }
}

}  // namespace lcr
