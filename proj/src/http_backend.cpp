// src/http_backend.cpp

// Copyright 2026  The sfd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "sfd/embeddings.hpp"
#include "sfd/error.hpp"
#include "sfd/llm_gateway.hpp"
#include "sfd/util.hpp"

namespace sfd {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // prefix, no trailing slash
};

Endpoint split_url(const std::string& base_url) {
  auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos)
    throw ConfigError("base URL must include a scheme: " + base_url);
  auto path_start = base_url.find('/', scheme_end + 3);
  Endpoint ep;
  if (path_start == std::string::npos) {
    ep.origin = base_url;
  } else {
    ep.origin = base_url.substr(0, path_start);
    ep.path = base_url.substr(path_start);
    while (!ep.path.empty() && ep.path.back() == '/') ep.path.pop_back();
  }
  return ep;
}

// POSTs a JSON body and returns the parsed response. Connection failures,
// 429 and 5xx are transient; other non-2xx statuses are not.
json post_json(const std::string& base_url, const std::string& route,
               const std::string& token, std::chrono::seconds timeout,
               const json& body) {
  const auto ep = split_url(base_url);
  httplib::Client client(ep.origin);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
  auto res = client.Post(ep.path + route, headers, body.dump(),
                         "application/json");
  if (!res)
    throw TransientError("request to " + base_url + route + " failed: " +
                         httplib::to_string(res.error()));
  if (res->status == 429 || res->status >= 500)
    throw TransientError("HTTP " + std::to_string(res->status) + " from " +
                         base_url + route);
  if (res->status < 200 || res->status >= 300)
    throw Error("HTTP " + std::to_string(res->status) + " from " + base_url +
                route + ": " + res->body.substr(0, 200));
  json reply = json::parse(res->body, nullptr, false);
  if (reply.is_discarded())
    throw TransientError("non-JSON response from " + base_url + route);
  return reply;
}

}  // namespace

HttpChatBackend::HttpChatBackend(std::string base_url, std::string bearer_token,
                                 std::chrono::seconds timeout)
    : base_url_(std::move(base_url)),
      token_(std::move(bearer_token)),
      timeout_(timeout) {
  split_url(base_url_);
}

std::string HttpChatBackend::complete(const CompletionRequest& req) {
  json body = {
      {"model", req.model_id},
      {"messages", json::array({{{"role", "user"}, {"content", req.prompt}}})},
      {"temperature", req.temperature},
      {"max_tokens", req.max_tokens}};
  json reply = post_json(base_url_, "/chat/completions", token_, timeout_, body);
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw TransientError("chat completion response without choices[0].message.content");
  }
}

HttpEmbedder::HttpEmbedder(std::string base_url, std::string model,
                           std::string bearer_token,
                           std::chrono::seconds timeout)
    : base_url_(std::move(base_url)),
      model_(std::move(model)),
      token_(std::move(bearer_token)),
      timeout_(timeout) {
  split_url(base_url_);
}

std::vector<EmbeddingVector> HttpEmbedder::embed_batch(
    const std::vector<std::string>& texts) {
  json body = {{"model", model_}, {"input", texts}};
  json reply = post_json(base_url_, "/embeddings", token_, timeout_, body);
  std::vector<EmbeddingVector> out;
  try {
    const auto& data = reply.at("data");
    if (data.size() != texts.size())
      throw TransientError("embedding response has " +
                           std::to_string(data.size()) + " vectors for " +
                           std::to_string(texts.size()) + " inputs");
    out.resize(texts.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      std::size_t slot = data[i].contains("index")
                             ? data[i]["index"].get<std::size_t>()
                             : i;
      if (slot >= out.size()) throw TransientError("embedding index out of range");
      out[slot] =
          EmbeddingVector(data[i].at("embedding").get<std::vector<double>>());
    }
  } catch (const json::exception& e) {
    throw TransientError(std::string("malformed embedding response: ") + e.what());
  }
  for (const auto& v : out) {
    if (dim_ == 0) dim_ = v.dim();
    if (v.dim() != dim_)
      throw Error("embedding endpoint returned dimension " +
                  std::to_string(v.dim()) + ", expected " + std::to_string(dim_));
  }
  return out;
}

}  // namespace sfd
