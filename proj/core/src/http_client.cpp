#include "medvp/http_client.hpp"

#include <algorithm>
#include <thread>

#include <httplib.h>

namespace medvp {

namespace {

class HttplibTransport final : public HttpTransport {
 public:
  explicit HttplibTransport(std::chrono::milliseconds timeout) : timeout_(timeout) {}

  HttpResponse post(const std::string& url, const std::string& body, const HttpHeaders& headers) override {
    auto [origin, path] = split_url(url);
    httplib::Client client(origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto res = client.Post(path, h, body, "application/json");
    if (!res) throw Error("request to " + url + " failed: " + httplib::to_string(res.error()));
    return {res->status, res->body};
  }

 private:
  std::chrono::milliseconds timeout_;
};

}  // namespace

std::unique_ptr<HttpTransport> make_http_transport(std::chrono::milliseconds timeout) {
  return std::make_unique<HttplibTransport>(timeout);
}

std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error("URL must start with http:// or https://: " + url);
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw Error("unsupported URL scheme: " + scheme);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int retry) {
  auto delay = policy.initial_backoff;
  for (int i = 1; i < retry && delay < policy.max_backoff; ++i) delay *= 2;
  return std::min(delay, policy.max_backoff);
}

std::string post_json_with_retry(HttpTransport& transport, const std::string& url, const std::string& body,
                                 const HttpHeaders& headers, const RetryPolicy& policy) {
  const int attempts = std::max(1, policy.max_attempts);
  std::string last_error;
  int last_status = 0;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    if (attempt > 1) std::this_thread::sleep_for(backoff_delay(policy, attempt - 1));
    try {
      HttpResponse res = transport.post(url, body, headers);
      if (res.status >= 200 && res.status < 300) return std::move(res.body);
      last_status = res.status;
      last_error = "HTTP " + std::to_string(res.status) + ": " + res.body.substr(0, 200);
    } catch (const Error& e) {
      last_status = 0;
      last_error = e.what();
    }
  }
  throw HttpError(url + " failed after " + std::to_string(attempts) + " attempts: " + last_error, last_status,
                  attempts);
}

}  // namespace medvp
