#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "citescope/corpus.hpp"

namespace citescope {

struct PaperId {
    std::string id;
    std::optional<std::string> title;
    std::optional<int> year;

    bool operator==(const PaperId&) const = default;
};

// One page of "who cites target". An absent cursor marks the last page;
// complete is only ever set on a last page.
struct CitationPage {
    PaperId target;
    std::vector<PaperId> citers;
    std::optional<std::string> cursor;
    bool complete = false;

    bool operator==(const CitationPage&) const = default;
};

nlohmann::json to_json(const PaperId& p);
PaperId paper_id_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CitationPage& page);
CitationPage citation_page_from_json(const nlohmann::json& j);

enum class ProviderMode { offline, remote };

struct ProviderConfig {
    ProviderMode mode = ProviderMode::offline;
    std::filesystem::path snapshot_path;
    // Remote settings. The templates may contain {id}, {cursor} and
    // {page_size}; the resolve template {doi}, {title} and {year}.
    std::string endpoint_url;
    std::string resolve_url;
    std::string api_key;
    std::string api_key_header = "X-API-Key";
    double rate_limit_per_sec = 5.0;
    int max_retries = 3;
    int page_size = 100;
    std::chrono::milliseconds backoff_initial{200};
    std::chrono::milliseconds timeout{10000};
    std::filesystem::path cache_path;

    // Throws UsageError when an invariant is violated.
    void validate() const;
};

class CitationProvider {
public:
    virtual ~CitationProvider() = default;

    // nullopt means the provider does not know the reference. Remote
    // transport failures throw TransportError instead.
    virtual std::optional<PaperId> resolve_reference(const ReferenceRecord& record) = 0;

    // Throws NotFoundError for an unknown id and TransportError once
    // retries are exhausted.
    virtual CitationPage fetch_citers(const PaperId& id, const std::optional<std::string>& cursor) = 0;

    // Requests that actually reached a remote endpoint.
    virtual std::size_t remote_requests() const { return 0; }
};

// Offline citation index: nodes.tsv (id, title, year[, doi]) and
// edges.tsv (citing_id, cited_id). Extra columns are ignored; '#' lines
// are comments.
class Snapshot {
public:
    struct Node {
        std::string id;
        std::optional<std::string> title;
        std::optional<int> year;
        std::optional<std::string> doi;
    };

    static Snapshot load(const std::filesystem::path& dir);

    const std::vector<Node>& nodes() const { return nodes_; }
    const Node* find(const std::string& id) const;
    // Distinct citers of id sorted by id; self-citations dropped.
    const std::vector<std::string>& citers_of(const std::string& id) const;

    std::optional<PaperId> resolve(const ReferenceRecord& record) const;
    PaperId paper(const std::string& id) const;

private:
    std::vector<Node> nodes_;
    std::unordered_map<std::string, std::size_t> index_;
    std::unordered_map<std::string, std::vector<std::string>> citers_;
    std::unordered_map<std::string, std::string> by_doi_;
    std::map<std::string, std::string> by_title_year_;
};

// Serves pages from a snapshot. Cursors are decimal offsets into the
// sorted citer list. Every final page is complete.
class OfflineProvider : public CitationProvider {
public:
    OfflineProvider(std::shared_ptr<const Snapshot> snapshot, int page_size);

    std::optional<PaperId> resolve_reference(const ReferenceRecord& record) override;
    CitationPage fetch_citers(const PaperId& id, const std::optional<std::string>& cursor) override;

private:
    std::shared_ptr<const Snapshot> snapshot_;
    int page_size_;
};

// Spaces requests at least 1/rate apart, shared by all callers, so any
// window of length w sees at most rate*w + 1 requests.
class RateLimiter {
public:
    explicit RateLimiter(double per_second);
    void acquire();

private:
    std::mutex mutex_;
    std::chrono::steady_clock::duration interval_;
    std::chrono::steady_clock::time_point next_;
};

// HTTP JSON client. Instances hitting the same origin at the same rate
// share one RateLimiter. Page responses look like
//   {"citers": [{"id": ..., "title": ..., "year": ...}], "next_cursor": "..." | null,
//    "complete": true|false}
// and resolve responses like {"id": ..., "title": ..., "year": ...}; 404
// means not found, 429 and 5xx are retried with exponential backoff.
class RemoteProvider : public CitationProvider {
public:
    explicit RemoteProvider(ProviderConfig config);

    std::optional<PaperId> resolve_reference(const ReferenceRecord& record) override;
    CitationPage fetch_citers(const PaperId& id, const std::optional<std::string>& cursor) override;
    std::size_t remote_requests() const override { return requests_.load(); }

private:
    struct Response {
        int status = 0;
        std::string body;
    };
    // Returns the final 2xx or 404 response; throws TransportError otherwise.
    Response get_with_retries(const std::string& url);

    ProviderConfig config_;
    std::shared_ptr<RateLimiter> limiter_;
    std::atomic<std::size_t> requests_{0};
};

// Append-only on-disk log of resolved references and citation pages, keyed
// by (target id, cursor). The whole log is replayed on open; a truncated
// trailing line from an interrupted run is ignored.
class CitationCache {
public:
    explicit CitationCache(std::filesystem::path path);

    std::optional<CitationPage> find_page(const std::string& target, const std::optional<std::string>& cursor) const;
    void store_page(const std::optional<std::string>& cursor, const CitationPage& page);

    // Outer optional: cache hit. Inner: the resolved id or not-found.
    std::optional<std::optional<PaperId>> find_resolution(const std::string& key) const;
    void store_resolution(const std::string& key, const std::optional<PaperId>& result);

    std::size_t size() const;

private:
    void append(const nlohmann::json& entry);

    std::filesystem::path path_;
    mutable std::mutex mutex_;
    std::map<std::pair<std::string, std::string>, CitationPage> pages_;
    std::map<std::string, std::optional<PaperId>> resolutions_;
};

class CachedProvider : public CitationProvider {
public:
    CachedProvider(std::unique_ptr<CitationProvider> inner, std::shared_ptr<CitationCache> cache);

    std::optional<PaperId> resolve_reference(const ReferenceRecord& record) override;
    CitationPage fetch_citers(const PaperId& id, const std::optional<std::string>& cursor) override;
    std::size_t remote_requests() const override { return inner_->remote_requests(); }

private:
    std::unique_ptr<CitationProvider> inner_;
    std::shared_ptr<CitationCache> cache_;
};

// Offline or remote provider per config, wrapped in a cache when
// cache_path is set. CITESCOPE_API_KEY overrides config.api_key.
std::unique_ptr<CitationProvider> make_provider(ProviderConfig config);

}  // namespace citescope
