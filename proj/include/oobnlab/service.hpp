#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "oobnlab/bundle.hpp"
#include "oobnlab/error.hpp"

namespace oobnlab {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path bundle;
  bool read_only = true;
  std::optional<std::filesystem::path> static_dir;
};

struct HttpResult {
  int status = 200;
  std::string body;
};

// HTTP status for an engine error code.
int http_status(Errc code);

// Request handling without sockets; the server below and the tests both go
// through `handle`. The bundle is shared read-only between requests.
class Service {
 public:
  explicit Service(ModelBundle bundle);

  HttpResult handle(std::string_view method, std::string_view path, std::string_view body) const;
  const ModelBundle& bundle() const noexcept { return bundle_; }

 private:
  ModelBundle bundle_;
};

// Blocks serving `service` until the process is stopped. Throws IoError when
// the address cannot be bound.
void serve(const Service& service, const ServiceConfig& config);

}  // namespace oobnlab
