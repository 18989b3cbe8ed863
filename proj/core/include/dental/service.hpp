#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>

namespace dental {

struct ServiceConfig {
  std::filesystem::path data_dir = "data";
  int workers = 0;  // 0 means the number of processor cores
};

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

using QueryMap = std::map<std::string, std::string>;

/// Case store, job pool and HTTP-independent request router. Cases live
/// under <data_dir>/cases/<id>/ and survive restarts.
class CaseService {
 public:
  explicit CaseService(ServiceConfig config);
  ~CaseService();
  CaseService(const CaseService&) = delete;
  CaseService& operator=(const CaseService&) = delete;

  ApiResponse handle(std::string_view method, std::string_view path, const QueryMap& query, std::string_view body);

  /// Blocks until no job is queued or running.
  void wait_idle();

  int workers() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// HTTP transport (cpp-httplib) in front of a CaseService. Static files, if
/// a directory is given, are served under "/".
class HttpServer {
 public:
  explicit HttpServer(CaseService& service, std::filesystem::path static_dir = {});
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds host:port (port 0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); requires a prior bind().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace dental
