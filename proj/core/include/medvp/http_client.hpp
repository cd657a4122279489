#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "medvp/types.hpp"

namespace medvp {

struct HttpResponse {
  int status = 0;
  std::string body;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

/// Raised when a request fails after every retry.
class HttpError : public Error {
 public:
  HttpError(const std::string& what, int status, int attempts)
      : Error(what), status_(status), attempts_(attempts) {}
  /// Last HTTP status seen, 0 for connection-level failures.
  [[nodiscard]] int status() const { return status_; }
  [[nodiscard]] int attempts() const { return attempts_; }

 private:
  int status_;
  int attempts_;
};

/// Minimal POST-only transport so clients can be tested without a network.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  /// Throws Error on connection-level failure; HTTP error statuses are
  /// returned, not thrown.
  virtual HttpResponse post(const std::string& url, const std::string& body, const HttpHeaders& headers) = 0;
};

/// cpp-httplib backed transport supporting http:// and https:// URLs.
std::unique_ptr<HttpTransport> make_http_transport(std::chrono::milliseconds timeout = std::chrono::seconds(60));

struct RetryPolicy {
  int max_attempts = 4;
  std::chrono::milliseconds initial_backoff{200};
  std::chrono::milliseconds max_backoff{5000};
};

/// Delay before retry number `retry` (1-based): initial * 2^(retry-1),
/// capped at max_backoff.
std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int retry);

/// POSTs `body` as application/json and returns the response body of the
/// first 2xx reply. Connection failures and non-2xx statuses are retried
/// with capped exponential backoff; throws HttpError once attempts run out.
std::string post_json_with_retry(HttpTransport& transport, const std::string& url, const std::string& body,
                                 const HttpHeaders& headers, const RetryPolicy& policy);

/// Splits "scheme://host[:port]/path" into ("scheme://host[:port]", "/path").
std::pair<std::string, std::string> split_url(const std::string& url);

}  // namespace medvp
