#pragma once

// Embedding access: content digests, a two-level (memory + disk) vector
// cache, the offline mock provider, and a client that batches cache misses
// through a rate-limited, retrying provider call.
//
// Disk entry layout (little-endian), at <dir>/<hex[0:2]>/<hex>.vec:
//   "SAGEVEC1" | uint32 dimension | dimension x float64 | SHA-256(dimension field + values)

#include <sage/error.hpp>
#include <sage/rng.hpp>
#include <sage/tokenization.hpp>
#include <sage/utf8.hpp>

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

namespace sage {

static_assert(std::endian::native == std::endian::little, "cache format assumes a little-endian host");

// ---------------------------------------------------------------------------
// Digests

using Digest = std::array<std::uint8_t, 32>;

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new()) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) throw Error("SHA-256 init failed");
    }
    ~Sha256() { EVP_MD_CTX_free(ctx_); }
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    Sha256& update(std::string_view bytes) {
        if (EVP_DigestUpdate(ctx_, bytes.data(), bytes.size()) != 1) throw Error("SHA-256 update failed");
        return *this;
    }

    Digest finish() {
        Digest d{};
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_, d.data(), &len) != 1 || len != d.size()) throw Error("SHA-256 final failed");
        return d;
    }

private:
    EVP_MD_CTX* ctx_;
};

inline Digest sha256(std::string_view bytes) { return Sha256().update(bytes).finish(); }

inline std::string to_hex(std::span<const std::uint8_t> bytes) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xF]);
    }
    return out;
}

inline Digest text_digest(std::string_view text) { return sha256(text); }

/// Cache key: hex SHA-256 of provider NUL model NUL text.
inline std::string cache_key(std::string_view provider_id, std::string_view model_id, std::string_view text) {
    return to_hex(Sha256().update(provider_id).update(std::string_view("\0", 1)).update(model_id)
                      .update(std::string_view("\0", 1)).update(text).finish());
}

// ---------------------------------------------------------------------------
// Types

struct ProviderConfig {
    std::string provider_id = "mock";
    std::string model_id = "mock-v1";
    std::string endpoint_url;
    std::string api_key_env;
    std::size_t dimension = 1536;
    std::size_t max_batch = 64;
    std::size_t max_in_flight = 4;
    std::size_t requests_per_minute = 3000;
    std::size_t max_input_tokens = 0;  // 0 disables truncation

    void validate() const {
        if (provider_id.empty()) throw ConfigError("provider_id: must be non-empty");
        if (model_id.empty()) throw ConfigError("model_id: must be non-empty");
        if (dimension == 0) throw ConfigError("dimension: must be > 0");
        if (max_batch == 0) throw ConfigError("max_batch: must be >= 1");
        if (max_in_flight == 0) throw ConfigError("max_in_flight: must be >= 1");
        if (requests_per_minute == 0) throw ConfigError("requests_per_minute: must be >= 1");
    }

    /// Name used for subjects and report rows.
    std::string subject_name() const { return model_id; }
};

struct EmbeddingVector {
    std::vector<double> values;
    Digest text_digest{};

    std::size_t dimension() const noexcept { return values.size(); }
};

/// Fetches raw vectors for one batch. Implementations throw TransportError
/// for network failures and ProviderError for non-success statuses.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::vector<std::vector<double>> fetch(const ProviderConfig& config,
                                                   std::span<const std::string> texts) = 0;
};

// ---------------------------------------------------------------------------
// Mock provider

/// Deterministic pseudo-embedding: Rng(fnv1a64(text) ^ seed) draws
/// `dimension` values uniform in [-1, 1), then L2-normalized.
inline std::vector<double> mock_embed(std::string_view text, std::size_t dimension, std::uint64_t seed) {
    if (dimension < 2) throw InputError("mock dimension must be >= 2");
    Rng rng(fnv1a64(text) ^ seed);
    std::vector<double> v(dimension);
    double norm2 = 0;
    for (auto& x : v) {
        x = 2.0 * rng.uniform01() - 1.0;
        norm2 += x * x;
    }
    const double norm = std::sqrt(norm2);
    for (auto& x : v) x /= norm;
    return v;
}

class MockProvider : public EmbeddingProvider {
public:
    explicit MockProvider(std::uint64_t seed = kDefaultSeed) : seed_(seed) {}

    std::vector<std::vector<double>> fetch(const ProviderConfig& config,
                                           std::span<const std::string> texts) override {
        std::vector<std::vector<double>> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(mock_embed(t, config.dimension, seed_));
        return out;
    }

private:
    std::uint64_t seed_;
};

// ---------------------------------------------------------------------------
// Cache

class EmbeddingCache {
public:
    /// Memory-only cache.
    EmbeddingCache() = default;
    explicit EmbeddingCache(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw IoError("cannot create cache dir " + dir_.string() + ": " + ec.message());
    }

    bool persistent() const noexcept { return !dir_.empty(); }
    const std::filesystem::path& dir() const noexcept { return dir_; }

    std::filesystem::path entry_path(const std::string& key) const {
        return dir_ / key.substr(0, 2) / (key + ".vec");
    }

    /// Throws CacheError naming the key when a disk entry is corrupt.
    std::optional<std::vector<double>> get(const std::string& key) const {
        {
            std::shared_lock lock(mu_);
            if (auto it = memory_.find(key); it != memory_.end()) return it->second;
        }
        if (!persistent()) return std::nullopt;
        auto v = read_entry(key);
        if (v) {
            std::unique_lock lock(mu_);
            memory_.emplace(key, *v);
        }
        return v;
    }

    void put(const std::string& key, const std::vector<double>& values) {
        if (values.empty()) throw InputError("refusing to cache an empty vector");
        if (persistent()) write_entry(key, values);
        std::unique_lock lock(mu_);
        memory_[key] = values;
    }

    std::size_t memory_size() const {
        std::shared_lock lock(mu_);
        return memory_.size();
    }

private:
    static std::string checksum(std::string_view payload) {
        const auto d = sha256(payload);
        return std::string(reinterpret_cast<const char*>(d.data()), d.size());
    }

    std::optional<std::vector<double>> read_entry(const std::string& key) const {
        const auto path = entry_path(key);
        std::ifstream in(path, std::ios::binary);
        if (!in) return std::nullopt;
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        constexpr std::string_view magic = "SAGEVEC1";
        if (bytes.size() < magic.size() + 4 + 32 || bytes.compare(0, magic.size(), magic) != 0)
            throw CacheError(key, "bad header");
        std::uint32_t dim = 0;
        std::memcpy(&dim, bytes.data() + magic.size(), 4);
        const std::size_t payload_size = 4 + static_cast<std::size_t>(dim) * sizeof(double);
        if (dim == 0 || bytes.size() != magic.size() + payload_size + 32) throw CacheError(key, "bad length");
        const std::string_view payload(bytes.data() + magic.size(), payload_size);
        if (checksum(payload) != std::string_view(bytes).substr(magic.size() + payload_size))
            throw CacheError(key, "checksum mismatch");
        std::vector<double> v(dim);
        std::memcpy(v.data(), payload.data() + 4, v.size() * sizeof(double));
        return v;
    }

    void write_entry(const std::string& key, const std::vector<double>& values) const {
        const auto path = entry_path(key);
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());

        std::string payload(4 + values.size() * sizeof(double), '\0');
        const auto dim = static_cast<std::uint32_t>(values.size());
        std::memcpy(payload.data(), &dim, 4);
        std::memcpy(payload.data() + 4, values.data(), values.size() * sizeof(double));

        static std::atomic<std::uint64_t> counter{0};
        auto tmp = path;
        tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) + "_" +
               std::to_string(counter++);
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            out << "SAGEVEC1" << payload << checksum(payload);
            if (!out) throw IoError("cannot write cache entry " + tmp.string());
        }
        std::filesystem::rename(tmp, path, ec);
        if (ec) throw IoError("cannot rename cache entry to " + path.string() + ": " + ec.message());
    }

    std::filesystem::path dir_;
    mutable std::shared_mutex mu_;
    mutable std::unordered_map<std::string, std::vector<double>> memory_;
};

// ---------------------------------------------------------------------------
// Time, throttling, concurrency

/// Seconds on a monotonic clock. Tests substitute ManualClock.
class Clock {
public:
    virtual ~Clock() = default;
    virtual double now() = 0;
    virtual void sleep_for(double seconds) = 0;
};

class SystemClock : public Clock {
public:
    double now() override {
        return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
    }
    void sleep_for(double seconds) override {
        if (seconds > 0) std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
    }
};

/// Clock whose sleeps advance time instantly.
class ManualClock : public Clock {
public:
    double now() override {
        std::lock_guard lock(mu_);
        return t_;
    }
    void sleep_for(double seconds) override {
        std::lock_guard lock(mu_);
        if (seconds > 0) t_ += seconds;
        sleeps_.push_back(seconds);
    }
    std::vector<double> sleeps() const {
        std::lock_guard lock(mu_);
        return sleeps_;
    }

private:
    mutable std::mutex mu_;
    double t_ = 0;
    std::vector<double> sleeps_;
};

/// At most `per_minute` acquisitions in any sliding 60 s window.
class RateLimiter {
public:
    RateLimiter(std::size_t per_minute, std::shared_ptr<Clock> clock)
        : per_minute_(per_minute), clock_(std::move(clock)) {}

    /// Blocks until a slot is free and returns the recorded timestamp.
    double acquire() {
        for (;;) {
            double wait;
            {
                std::lock_guard lock(mu_);
                const double t = clock_->now();
                while (!stamps_.empty() && stamps_.front() <= t - kWindow) stamps_.pop_front();
                if (stamps_.size() < per_minute_) {
                    stamps_.push_back(t);
                    return t;
                }
                wait = stamps_.front() + kWindow - t;
            }
            clock_->sleep_for(wait);
        }
    }

    static constexpr double kWindow = 60.0;

private:
    std::size_t per_minute_;
    std::shared_ptr<Clock> clock_;
    std::mutex mu_;
    std::deque<double> stamps_;
};

/// Counting gate bounding concurrent provider requests.
class InFlightGate {
public:
    explicit InFlightGate(std::size_t limit) : limit_(limit) {}

    void enter() {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return active_ < limit_; });
        ++active_;
        peak_ = std::max(peak_, active_);
    }
    void leave() {
        {
            std::lock_guard lock(mu_);
            --active_;
        }
        cv_.notify_one();
    }
    std::size_t peak() const {
        std::lock_guard lock(mu_);
        return peak_;
    }

private:
    std::size_t limit_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::size_t active_ = 0;
    std::size_t peak_ = 0;
};

struct RetryPolicy {
    std::size_t attempts = 5;
    double base_delay = 0.5;  // seconds, doubled per retry
    double max_delay = 30.0;

    static bool retryable(int status) noexcept { return status == 429 || status >= 500; }

    /// Delay before retry number `retry` (0-based): base * 2^retry scaled by a jitter in [1, 1.5).
    double delay(std::size_t retry, Rng& rng) const {
        const double d = std::min(max_delay, base_delay * std::ldexp(1.0, static_cast<int>(retry)));
        return d * (1.0 + 0.5 * rng.uniform01());
    }
};

// ---------------------------------------------------------------------------
// Client

struct ClientOptions {
    std::shared_ptr<Clock> clock = std::make_shared<SystemClock>();
    std::shared_ptr<const Tokenizer> tokenizer;  // needed only when max_input_tokens > 0
    RetryPolicy retry;
    std::uint64_t seed = kDefaultSeed;  // retry jitter
};

class EmbeddingClient {
public:
    EmbeddingClient(ProviderConfig config, std::shared_ptr<EmbeddingProvider> provider,
                    std::shared_ptr<EmbeddingCache> cache, ClientOptions options = {})
        : config_(std::move(config)),
          provider_(std::move(provider)),
          cache_(cache ? std::move(cache) : std::make_shared<EmbeddingCache>()),
          options_(std::move(options)),
          limiter_(config_.requests_per_minute, options_.clock),
          gate_(config_.max_in_flight),
          jitter_(derive_seed(options_.seed, config_.provider_id, config_.model_id)) {
        config_.validate();
        if (!provider_) throw ConfigError("provider: missing implementation for " + config_.provider_id);
        if (config_.max_input_tokens > 0 && !options_.tokenizer)
            throw ConfigError("max_input_tokens: requires a tokenizer");
    }

    const ProviderConfig& config() const noexcept { return config_; }

    /// Provider requests issued so far (one per batch attempt).
    std::size_t provider_calls() const noexcept { return calls_.load(); }
    std::size_t peak_in_flight() const { return gate_.peak(); }

    std::vector<std::string> warnings() const {
        std::lock_guard lock(warn_mu_);
        return warnings_;
    }

    EmbeddingVector embed(const std::string& text) {
        return std::move(embed_batch(std::span<const std::string>(&text, 1)).front());
    }

    /// One vector per text, in input order. Cache hits skip the provider;
    /// misses are fetched in batches of max_batch and persisted before return.
    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) {
        if (texts.empty()) throw InputError("embed_batch: no texts");
        std::vector<std::string> sent(texts.size());
        std::vector<std::string> keys(texts.size());
        std::vector<std::optional<std::vector<double>>> found(texts.size());
        std::unordered_map<std::string, std::size_t> miss_index;  // key -> position in misses
        std::vector<std::size_t> misses;

        for (std::size_t i = 0; i < texts.size(); ++i) {
            if (texts[i].empty()) throw InputError("embed_batch: text " + std::to_string(i) + " is empty");
            sent[i] = truncate(texts[i]);
            keys[i] = cache_key(config_.provider_id, config_.model_id, sent[i]);
            try {
                found[i] = cache_->get(keys[i]);
            } catch (const CacheError& e) {
                warn(std::string(e.what()) + "; refetching");
            }
            if (!found[i] && miss_index.emplace(keys[i], misses.size()).second) misses.push_back(i);
        }

        if (!misses.empty()) {
            const auto fetched = fetch_all(misses, sent);
            for (std::size_t m = 0; m < misses.size(); ++m) cache_->put(keys[misses[m]], fetched[m]);
            for (std::size_t i = 0; i < texts.size(); ++i)
                if (!found[i]) found[i] = fetched[miss_index.at(keys[i])];
        }

        std::vector<EmbeddingVector> out(texts.size());
        for (std::size_t i = 0; i < texts.size(); ++i) {
            out[i].values = std::move(*found[i]);
            out[i].text_digest = text_digest(texts[i]);
        }
        return out;
    }

private:
    std::string truncate(const std::string& text) {
        if (config_.max_input_tokens == 0) return text;
        const auto seq = options_.tokenizer->encode(text);
        if (seq.size() <= config_.max_input_tokens) return text;
        warn("truncated input " + to_hex(text_digest(text)).substr(0, 12) + " from " + std::to_string(seq.size()) +
             " to " + std::to_string(config_.max_input_tokens) + " tokens");
        return utf8::strip_invalid(
            options_.tokenizer->decode(std::span(seq.tokens).first(config_.max_input_tokens)));
    }

    void warn(std::string message) {
        std::lock_guard lock(warn_mu_);
        warnings_.push_back(std::move(message));
    }

    std::vector<std::vector<double>> fetch_all(const std::vector<std::size_t>& misses,
                                               const std::vector<std::string>& sent) {
        const std::size_t n_batches = (misses.size() + config_.max_batch - 1) / config_.max_batch;
        std::vector<std::vector<double>> out(misses.size());
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mu;

        auto worker = [&] {
            for (std::size_t b; (b = next++) < n_batches;) {
                const std::size_t lo = b * config_.max_batch;
                const std::size_t hi = std::min(lo + config_.max_batch, misses.size());
                std::vector<std::string> batch;
                for (std::size_t m = lo; m < hi; ++m) batch.push_back(sent[misses[m]]);
                try {
                    auto vecs = fetch_with_retry(batch);
                    for (std::size_t m = lo; m < hi; ++m) out[m] = std::move(vecs[m - lo]);
                } catch (...) {
                    std::lock_guard lock(failure_mu);
                    if (!failure) failure = std::current_exception();
                    next = n_batches;
                }
            }
        };

        const std::size_t n_threads = std::min(config_.max_in_flight, n_batches);
        if (n_threads <= 1) {
            worker();
        } else {
            std::vector<std::jthread> threads;
            for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
        }
        if (failure) std::rethrow_exception(failure);
        return out;
    }

    std::vector<std::vector<double>> fetch_with_retry(const std::vector<std::string>& batch) {
        for (std::size_t attempt = 0;; ++attempt) {
            try {
                auto vecs = fetch_once(batch);
                check(vecs, batch.size());
                return vecs;
            } catch (const TransportError&) {
                if (attempt + 1 >= options_.retry.attempts) throw;
            } catch (const ProviderError& e) {
                if (!RetryPolicy::retryable(e.status()) || attempt + 1 >= options_.retry.attempts) throw;
            }
            double d;
            {
                std::lock_guard lock(jitter_mu_);
                d = options_.retry.delay(attempt, jitter_);
            }
            options_.clock->sleep_for(d);
        }
    }

    std::vector<std::vector<double>> fetch_once(const std::vector<std::string>& batch) {
        gate_.enter();
        struct Leave {
            InFlightGate& g;
            ~Leave() { g.leave(); }
        } leave{gate_};
        limiter_.acquire();
        ++calls_;
        return provider_->fetch(config_, batch);
    }

    void check(const std::vector<std::vector<double>>& vecs, std::size_t expected) const {
        if (vecs.size() != expected)
            throw ProviderError(200, "expected " + std::to_string(expected) + " vectors, got " +
                                         std::to_string(vecs.size()));
        for (const auto& v : vecs) {
            if (v.size() != config_.dimension)
                throw ProviderError(200, "vector dimension " + std::to_string(v.size()) + " != configured " +
                                             std::to_string(config_.dimension));
            for (double x : v)
                if (!std::isfinite(x)) throw ProviderError(200, "non-finite embedding value");
        }
    }

    ProviderConfig config_;
    std::shared_ptr<EmbeddingProvider> provider_;
    std::shared_ptr<EmbeddingCache> cache_;
    ClientOptions options_;
    RateLimiter limiter_;
    InFlightGate gate_;
    std::mutex jitter_mu_;
    Rng jitter_;
    std::atomic<std::size_t> calls_{0};
    mutable std::mutex warn_mu_;
    std::vector<std::string> warnings_;
};

}  // namespace sage
