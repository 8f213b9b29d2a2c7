#pragma once

#include <cstdlib>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "trajex/config.hpp"
#include "trajex/errors.hpp"
#include "trajex/image_io.hpp"
#include "trajex/proposal.hpp"

namespace trajex {

// OpenAI-compatible chat-completions client: one image part (base64 PNG of
// the frame) plus one text part. Auth comes from TRAJEX_API_KEY.
class HttpBackend : public VlmBackend {
public:
    explicit HttpBackend(const BackendConfig& cfg) : cfg_(cfg) {
        const char* key = std::getenv("TRAJEX_API_KEY");
        if (!key || !*key)
            throw Error(ErrorCode::Backend, "TRAJEX_API_KEY is not set");
        api_key_ = key;
    }

    std::string complete(const Frame& frame, const std::string& prompt,
                         const std::string&) override {
        nlohmann::json body = {
            {"model", cfg_.model_id},
            {"messages",
             {{{"role", "user"},
               {"content",
                {{{"type", "image_url"},
                  {"image_url",
                   {{"url", "data:image/png;base64," + base64_encode(encode_png(frame))}}}},
                 {{"type", "text"}, {"text", prompt}}}}}}}};

        httplib::Client client(cfg_.base_url);
        client.set_connection_timeout(std::chrono::duration<double>(cfg_.timeout_s));
        client.set_read_timeout(std::chrono::duration<double>(cfg_.timeout_s));
        httplib::Headers headers = {{"Authorization", "Bearer " + api_key_}};
        auto res = client.Post("/chat/completions", headers, body.dump(), "application/json");
        if (!res)
            throw TransientBackendError(0, "transport error: " + httplib::to_string(res.error()));
        if (res->status == 429 || res->status >= 500)
            throw TransientBackendError(res->status, excerpt(res->body));
        if (res->status != 200)
            throw Error(ErrorCode::Backend,
                        "HTTP " + std::to_string(res->status) + ": " + excerpt(res->body));
        nlohmann::json doc = nlohmann::json::parse(res->body, nullptr, false);
        if (doc.is_discarded() || !doc.contains("choices") || doc["choices"].empty())
            throw Error(ErrorCode::Backend, "malformed completion body: " + excerpt(res->body));
        try {
            return doc["choices"][0]["message"]["content"].get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::Backend, std::string("missing message content: ") + e.what());
        }
    }

    std::string model_id() const override { return cfg_.model_id; }

private:
    static std::string excerpt(const std::string& body) {
        return body.size() <= 200 ? body : body.substr(0, 200) + "...";
    }

    BackendConfig cfg_;
    std::string api_key_;
};

}  // namespace trajex
