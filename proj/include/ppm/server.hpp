#ifndef PPM_SERVER_HPP
#define PPM_SERVER_HPP

#include <string>

#ifndef CPPHTTPLIB_LISTEN_BACKLOG
#define CPPHTTPLIB_LISTEN_BACKLOG 128
#endif
#include <httplib.h>

#include "ppm/service.hpp"

namespace ppm {

/// Routes the JSON protocol onto an httplib server. The registry must
/// outlive the server.
inline void install_routes(httplib::Server& server, const ModelRegistry& registry) {
  auto send = [](httplib::Response& res, const HttpReply& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  server.Post("/predict", [&registry, send](const httplib::Request& req, httplib::Response& res) {
    send(res, handle_predict(registry, req.body));
  });
  server.Get("/models", [&registry, send](const httplib::Request&, httplib::Response& res) {
    send(res, handle_models(registry));
  });
  server.Get("/health", [&registry, send](const httplib::Request&, httplib::Response& res) {
    send(res, handle_health(registry));
  });
}

} // namespace ppm

#endif // PPM_SERVER_HPP
