#pragma once

// HTTP adapters for hosted embedding APIs. Each adapter maps a batch of
// texts to one JSON request and reads vectors back in input order.
//
//   openai  POST {base}/v1/embeddings        {"model", "input": [..]}                  -> data[i].embedding
//   voyage  POST {base}/v1/embeddings        {"model", "input": [..]}                  -> data[i].embedding
//   cohere  POST {base}/v2/embed             {"model", "texts": [..], "input_type",
//                                             "embedding_types": ["float"]}            -> embeddings.float[i]
//   gemini  POST {base}/v1beta/models/{m}:batchEmbedContents
//                                            {"requests": [{"model", "content"}]}      -> embeddings[i].values
//
// openai/voyage/cohere authenticate with a Bearer token, gemini with x-goog-api-key.
// Build with CPPHTTPLIB_OPENSSL_SUPPORT (the sage::http target) for https endpoints.

#include <sage/embedding.hpp>

#include <httplib.h>
#include <json.hpp>

#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

namespace sage {

struct Url {
    std::string origin;  // scheme://host[:port]
    std::string path;    // begins with '/'
};

inline Url parse_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint_url: missing scheme in '" + url + "'");
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw ConfigError("endpoint_url: unsupported scheme '" + scheme + "'");
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

enum class ApiFlavor { openai, voyage, cohere, gemini };

inline ApiFlavor parse_api_flavor(const std::string& provider_id) {
    if (provider_id == "openai") return ApiFlavor::openai;
    if (provider_id == "voyage") return ApiFlavor::voyage;
    if (provider_id == "cohere") return ApiFlavor::cohere;
    if (provider_id == "gemini") return ApiFlavor::gemini;
    throw ConfigError("provider_id: unknown provider '" + provider_id + "'");
}

inline std::string default_endpoint(ApiFlavor flavor, const std::string& model) {
    switch (flavor) {
        case ApiFlavor::openai: return "https://api.openai.com/v1/embeddings";
        case ApiFlavor::voyage: return "https://api.voyageai.com/v1/embeddings";
        case ApiFlavor::cohere: return "https://api.cohere.com/v2/embed";
        case ApiFlavor::gemini:
            return "https://generativelanguage.googleapis.com/v1beta/models/" + model + ":batchEmbedContents";
    }
    return {};
}

inline std::string default_api_key_env(ApiFlavor flavor) {
    switch (flavor) {
        case ApiFlavor::openai: return "OPENAI_API_KEY";
        case ApiFlavor::voyage: return "VOYAGE_API_KEY";
        case ApiFlavor::cohere: return "COHERE_API_KEY";
        case ApiFlavor::gemini: return "GEMINI_API_KEY";
    }
    return {};
}

namespace detail {

inline nlohmann::json request_body(ApiFlavor flavor, const ProviderConfig& config,
                                   std::span<const std::string> texts) {
    using nlohmann::json;
    switch (flavor) {
        case ApiFlavor::openai:
        case ApiFlavor::voyage:
            return json{{"model", config.model_id}, {"input", texts}};
        case ApiFlavor::cohere:
            return json{{"model", config.model_id},
                        {"texts", texts},
                        {"input_type", "search_document"},
                        {"embedding_types", {"float"}}};
        case ApiFlavor::gemini: {
            json requests = json::array();
            for (const auto& t : texts)
                requests.push_back({{"model", "models/" + config.model_id}, {"content", {{"parts", {{{"text", t}}}}}}});
            return json{{"requests", requests}};
        }
    }
    return {};
}

inline std::vector<double> as_vector(const nlohmann::json& j) {
    if (!j.is_array()) throw ProviderError(200, "embedding is not an array");
    return j.get<std::vector<double>>();
}

inline std::vector<std::vector<double>> parse_response(ApiFlavor flavor, const nlohmann::json& body) {
    std::vector<std::vector<double>> out;
    switch (flavor) {
        case ApiFlavor::openai:
        case ApiFlavor::voyage: {
            const auto& data = body.at("data");
            out.resize(data.size());
            for (std::size_t pos = 0; pos < data.size(); ++pos) {
                const auto& item = data[pos];
                const auto idx = item.value("index", pos);
                if (idx >= out.size()) throw ProviderError(200, "response index out of range");
                out[idx] = as_vector(item.at("embedding"));
            }
            break;
        }
        case ApiFlavor::cohere:
            for (const auto& e : body.at("embeddings").at("float")) out.push_back(as_vector(e));
            break;
        case ApiFlavor::gemini:
            for (const auto& e : body.at("embeddings")) out.push_back(as_vector(e.at("values")));
            break;
    }
    return out;
}

}  // namespace detail

class HttpEmbeddingProvider : public EmbeddingProvider {
public:
    explicit HttpEmbeddingProvider(ApiFlavor flavor, double timeout_seconds = 60.0)
        : flavor_(flavor), timeout_(timeout_seconds) {}

    std::vector<std::vector<double>> fetch(const ProviderConfig& config,
                                           std::span<const std::string> texts) override {
        const std::string key_env = config.api_key_env.empty() ? default_api_key_env(flavor_) : config.api_key_env;
        const char* key = std::getenv(key_env.c_str());
        if (!key || !*key) throw ConfigError("api_key_env: environment variable " + key_env + " is not set");

        const Url url = parse_url(config.endpoint_url.empty() ? default_endpoint(flavor_, config.model_id)
                                                               : config.endpoint_url);
        httplib::Client client(url.origin);
        const auto secs = static_cast<time_t>(timeout_);
        client.set_connection_timeout(secs, 0);
        client.set_read_timeout(secs, 0);
        client.set_write_timeout(secs, 0);

        httplib::Headers headers;
        if (flavor_ == ApiFlavor::gemini)
            headers.emplace("x-goog-api-key", key);
        else
            headers.emplace("Authorization", std::string("Bearer ") + key);

        const auto body = detail::request_body(flavor_, config, texts).dump();
        auto res = client.Post(url.path, headers, body, "application/json");
        if (!res) throw TransportError("POST " + url.origin + url.path + ": " + httplib::to_string(res.error()));
        if (res->status != 200) throw ProviderError(res->status, res->body.substr(0, 500));

        try {
            return detail::parse_response(flavor_, nlohmann::json::parse(res->body));
        } catch (const nlohmann::json::exception& e) {
            throw ProviderError(res->status, std::string("malformed response: ") + e.what());
        }
    }

private:
    ApiFlavor flavor_;
    double timeout_;
};

/// Provider for a config: "mock" is offline, everything else goes over HTTP.
inline std::shared_ptr<EmbeddingProvider> make_provider(const ProviderConfig& config, std::uint64_t seed) {
    if (config.provider_id == "mock") return std::make_shared<MockProvider>(seed);
    return std::make_shared<HttpEmbeddingProvider>(parse_api_flavor(config.provider_id));
}

}  // namespace sage
