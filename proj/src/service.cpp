#include "oobnlab/service.hpp"

#include <httplib.h>

#include "oobnlab/error.hpp"
#include "oobnlab/report.hpp"

namespace oobnlab {

using nlohmann::json;

int http_status(Errc code) {
  switch (code) {
    case Errc::UnknownPreset:
    case Errc::UnknownVariable:
      return 404;
    case Errc::ZeroProbabilityEvidence:
      return 422;
    default:
      return 400;
  }
}

Service::Service(ModelBundle bundle) : bundle_(std::move(bundle)) {}

namespace {

json parse_body(std::string_view body) {
  if (body.find_first_not_of(" \t\r\n") == std::string_view::npos) return json::object();
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(Errc::SchemaError, "request body must be a JSON object");
  return j;
}

Evidence evidence_of(const json& body) {
  Evidence ev;
  if (!body.contains("evidence")) return ev;
  const json& e = body["evidence"];
  if (!e.is_object()) throw Error(Errc::InvalidArgument, "'evidence' must map variable names to state labels");
  for (const auto& [k, v] : e.items()) {
    if (!v.is_string())
      throw Error(Errc::InvalidArgument, "finding for '" + k + "' must be a state label", {{"variable", k}});
    ev[k] = v.get<std::string>();
  }
  return ev;
}

std::optional<std::string> optional_string(const json& body, const char* key) {
  if (!body.contains(key) || body[key].is_null()) return std::nullopt;
  if (!body[key].is_string()) throw Error(Errc::InvalidArgument, std::string("'") + key + "' must be a string");
  return body[key].get<std::string>();
}

Precision precision_of(const json& body) {
  auto p = optional_string(body, "precision");
  if (!p || *p == "rounded") return Precision::Rounded;
  if (*p == "full") return Precision::Full;
  throw Error(Errc::InvalidArgument, "precision must be 'rounded' or 'full'");
}

}  // namespace

HttpResult Service::handle(std::string_view method, std::string_view path, std::string_view body) const {
  try {
    if (method == "GET" && path == "/health")
      return {200, render({{"status", "ok"}, {"model_hash", model_hash(bundle_)}})};
    if (method == "GET" && path == "/model") return {200, render(model_report(bundle_), Precision::Full)};
    if (method == "POST" && path == "/infer") {
      const json req = parse_body(body);
      if (auto model = optional_string(req, "model"); model && *model != bundle_.metadata.value("model", std::string{}))
        throw Error(Errc::UnknownVariable, "this service hosts a different model", {{"model", *model}});
      return {200, render(infer_report(bundle_, evidence_of(req)), precision_of(req))};
    }
    if (method == "POST" && path == "/scenario") {
      const json req = parse_body(body);
      ScenarioRequest sr{optional_string(req, "preset"), evidence_of(req), optional_string(req, "compare")};
      if (sr.preset && req.contains("evidence"))
        throw Error(Errc::InvalidArgument, "give either 'preset' or 'evidence', not both");
      return {200, render(scenario_report(bundle_, sr), precision_of(req))};
    }
    if (method == "POST" && path == "/sensitivity") {
      const json req = parse_body(body);
      SensitivityRequest sr;
      auto hyp = optional_string(req, "hypothesis");
      if (!hyp) throw Error(Errc::InvalidArgument, "'hypothesis' (Variable=state) is required");
      sr.hypothesis = *hyp;
      sr.scenario = optional_string(req, "scenario");
      sr.evidence = evidence_of(req);
      if (req.contains("evidence_sensitivity")) {
        if (!req["evidence_sensitivity"].is_boolean())
          throw Error(Errc::InvalidArgument, "'evidence_sensitivity' must be a boolean");
        sr.evidence_sensitivity = req["evidence_sensitivity"].get<bool>();
      }
      if (req.contains("top")) {
        if (!req["top"].is_number_unsigned()) throw Error(Errc::InvalidArgument, "'top' must be a nonnegative integer");
        sr.top = req["top"].get<std::size_t>();
      }
      return {200, render(sensitivity_report(bundle_, sr), precision_of(req))};
    }
    return {404, render(Error(Errc::InvalidArgument, "no endpoint " + std::string(method) + " " + std::string(path))
                            .to_json())};
  } catch (const Error& e) {
    return {http_status(e.code()), render(e.to_json(), Precision::Full)};
  } catch (const std::exception& e) {
    return {500, render({{"error", "InternalError"}, {"message", e.what()}, {"detail", json::object()}})};
  }
}

void serve(const Service& service, const ServiceConfig& config) {
  if (config.port < 1 || config.port > 65535)
    throw Error(Errc::InvalidArgument, "port must lie in [1, 65535]", {{"port", config.port}});
  httplib::Server server;
  if (config.static_dir && !server.set_mount_point("/", config.static_dir->string()))
    throw Error(Errc::IoError, "static directory '" + config.static_dir->string() + "' does not exist");
  auto route = [&service](const httplib::Request& req, httplib::Response& res) {
    const HttpResult r = service.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json; charset=utf-8");
  };
  server.Get("/health", route);
  server.Get("/model", route);
  server.Post("/infer", route);
  server.Post("/scenario", route);
  server.Post("/sensitivity", route);
  if (!server.bind_to_port(config.host, config.port))
    throw Error(Errc::IoError, "cannot bind " + config.host + ":" + std::to_string(config.port));
  server.listen_after_bind();
}

}  // namespace oobnlab
