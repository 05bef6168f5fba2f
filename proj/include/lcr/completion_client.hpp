#pragma once

// Text-in/text-out access to an external completion model.
//
// Wire format: POST <endpoint> with body {"prompt": "..."}; the reply body is
// {"text": "..."}. An optional bearer token is sent as an Authorization header.

#include <string>
#include <string_view>

namespace lcr {

class CompletionClient {
 public:
  virtual ~CompletionClient() = default;
  virtual std::string complete(std::string_view prompt) = 0;
};

class HttpCompletionClient : public CompletionClient {
 public:
  // `endpoint` is "http://host[:port]/path".
  explicit HttpCompletionClient(std::string endpoint, std::string bearer_token = {},
                                int timeout_seconds = 120);
  std::string complete(std::string_view prompt) override;

 private:
  std::string origin_;
  std::string path_;
  std::string token_;
  int timeout_;
};

}  // namespace lcr
