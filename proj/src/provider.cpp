#include "citescope/provider.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <thread>

#include <httplib.h>

#include "citescope/error.hpp"
#include "citescope/text.hpp"
#include "citescope/tsv.hpp"

namespace citescope {

// ---------------------------------------------------------------------------
// JSON forms

nlohmann::json to_json(const PaperId& p) {
    nlohmann::json j;
    j["id"] = p.id;
    j["title"] = p.title ? nlohmann::json(*p.title) : nlohmann::json(nullptr);
    j["year"] = p.year ? nlohmann::json(*p.year) : nlohmann::json(nullptr);
    return j;
}

PaperId paper_id_from_json(const nlohmann::json& j) {
    PaperId p;
    p.id = j.at("id").get<std::string>();
    if (p.id.empty()) throw DataError("paper id must be non-empty");
    if (j.contains("title") && !j["title"].is_null()) p.title = j["title"].get<std::string>();
    if (j.contains("year") && !j["year"].is_null()) p.year = j["year"].get<int>();
    return p;
}

nlohmann::json to_json(const CitationPage& page) {
    nlohmann::json j;
    j["target"] = to_json(page.target);
    nlohmann::json citers = nlohmann::json::array();
    for (const auto& c : page.citers) citers.push_back(to_json(c));
    j["citers"] = std::move(citers);
    j["cursor"] = page.cursor ? nlohmann::json(*page.cursor) : nlohmann::json(nullptr);
    j["complete"] = page.complete;
    return j;
}

CitationPage citation_page_from_json(const nlohmann::json& j) {
    CitationPage page;
    page.target = paper_id_from_json(j.at("target"));
    for (const auto& c : j.at("citers")) page.citers.push_back(paper_id_from_json(c));
    if (j.contains("cursor") && !j["cursor"].is_null()) page.cursor = j["cursor"].get<std::string>();
    page.complete = j.value("complete", false);
    return page;
}

void ProviderConfig::validate() const {
    if (!(rate_limit_per_sec > 0)) throw UsageError("provider.rate_limit_per_sec must be > 0");
    if (page_size < 1) throw UsageError("provider.page_size must be >= 1");
    if (max_retries < 0) throw UsageError("provider.max_retries must be >= 0");
    if (mode == ProviderMode::offline && snapshot_path.empty()) {
        throw UsageError("provider.snapshot_path is required in offline mode");
    }
    if (mode == ProviderMode::remote && endpoint_url.empty()) {
        throw UsageError("provider.endpoint_url is required in remote mode");
    }
}

// ---------------------------------------------------------------------------
// Snapshot

namespace {

std::string lower_ascii(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string title_year_key(const std::string& title, std::optional<int> year) {
    ReferenceRecord r;
    r.title = title;
    r.year = year;
    return dedup_key(r);
}

}  // namespace

Snapshot Snapshot::load(const std::filesystem::path& dir) {
    Snapshot snap;
    const auto nodes = read_tsv(dir / "nodes.tsv");
    const auto id_col = nodes.require_column("id");
    const auto title_col = nodes.column("title");
    const auto year_col = nodes.column("year");
    const auto doi_col = nodes.column("doi");
    snap.nodes_.reserve(nodes.rows.size());
    for (std::size_t r = 0; r < nodes.rows.size(); ++r) {
        const auto& row = nodes.rows[r];
        Node n;
        n.id = row[id_col];
        if (n.id.empty()) throw ParseError(nodes.source, nodes.line_numbers[r], "empty id");
        if (title_col && !row[*title_col].empty()) n.title = row[*title_col];
        if (year_col && !row[*year_col].empty()) {
            n.year = text::parse_int(row[*year_col]);
            if (!n.year) throw ParseError(nodes.source, nodes.line_numbers[r], "invalid year");
        }
        if (doi_col && !row[*doi_col].empty()) n.doi = row[*doi_col];
        if (!snap.index_.emplace(n.id, snap.nodes_.size()).second) {
            throw ParseError(nodes.source, nodes.line_numbers[r], "duplicate id '" + n.id + "'");
        }
        if (n.doi) snap.by_doi_.emplace(lower_ascii(*n.doi), n.id);
        if (n.title) {
            auto key = title_year_key(*n.title, n.year);
            auto [it, inserted] = snap.by_title_year_.emplace(key, n.id);
            if (!inserted && n.id < it->second) it->second = n.id;
        }
        snap.nodes_.push_back(std::move(n));
    }

    const auto edges = read_tsv(dir / "edges.tsv");
    const auto citing_col = edges.require_column("citing_id");
    const auto cited_col = edges.require_column("cited_id");
    for (std::size_t r = 0; r < edges.rows.size(); ++r) {
        const auto& citing = edges.rows[r][citing_col];
        const auto& cited = edges.rows[r][cited_col];
        if (!snap.index_.count(citing) || !snap.index_.count(cited)) {
            throw ParseError(edges.source, edges.line_numbers[r], "edge endpoint not in nodes.tsv");
        }
        if (citing == cited) continue;
        snap.citers_[cited].push_back(citing);
    }
    for (auto& [id, list] : snap.citers_) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    return snap;
}

const Snapshot::Node* Snapshot::find(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &nodes_[it->second];
}

const std::vector<std::string>& Snapshot::citers_of(const std::string& id) const {
    static const std::vector<std::string> none;
    auto it = citers_.find(id);
    return it == citers_.end() ? none : it->second;
}

PaperId Snapshot::paper(const std::string& id) const {
    const Node* n = find(id);
    if (!n) throw NotFoundError("unknown paper id '" + id + "'");
    return PaperId{n->id, n->title, n->year};
}

std::optional<PaperId> Snapshot::resolve(const ReferenceRecord& record) const {
    if (record.doi) {
        auto it = by_doi_.find(lower_ascii(*record.doi));
        if (it != by_doi_.end()) return paper(it->second);
    }
    auto it = by_title_year_.find(dedup_key(record));
    if (it != by_title_year_.end()) return paper(it->second);
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// OfflineProvider

OfflineProvider::OfflineProvider(std::shared_ptr<const Snapshot> snapshot, int page_size)
    : snapshot_(std::move(snapshot)), page_size_(page_size) {
    if (page_size_ < 1) throw UsageError("page_size must be >= 1");
}

std::optional<PaperId> OfflineProvider::resolve_reference(const ReferenceRecord& record) {
    return snapshot_->resolve(record);
}

CitationPage OfflineProvider::fetch_citers(const PaperId& id, const std::optional<std::string>& cursor) {
    CitationPage page;
    page.target = snapshot_->paper(id.id);
    const auto& all = snapshot_->citers_of(id.id);
    std::size_t offset = 0;
    if (cursor) {
        auto parsed = text::parse_int(*cursor);
        if (!parsed || *parsed < 0 || static_cast<std::size_t>(*parsed) > all.size()) {
            throw DataError("invalid cursor '" + *cursor + "' for " + id.id);
        }
        offset = static_cast<std::size_t>(*parsed);
    }
    const std::size_t end = std::min(all.size(), offset + static_cast<std::size_t>(page_size_));
    for (std::size_t i = offset; i < end; ++i) page.citers.push_back(snapshot_->paper(all[i]));
    if (end < all.size()) {
        page.cursor = std::to_string(end);
    } else {
        page.complete = true;
    }
    return page;
}

// ---------------------------------------------------------------------------
// RateLimiter

RateLimiter::RateLimiter(double per_second)
    : interval_(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
          std::chrono::duration<double>(1.0 / per_second))),
      next_(std::chrono::steady_clock::now()) {
    if (!(per_second > 0)) throw UsageError("rate limit must be > 0");
}

void RateLimiter::acquire() {
    std::chrono::steady_clock::time_point slot;
    {
        std::lock_guard lock(mutex_);
        slot = std::max(next_, std::chrono::steady_clock::now());
        next_ = slot + interval_;
    }
    std::this_thread::sleep_until(slot);
}

// ---------------------------------------------------------------------------
// RemoteProvider

namespace {

std::string url_encode(std::string_view s) {
    static constexpr char hex[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 15]);
        }
    }
    return out;
}

std::string substitute(std::string tmpl, const std::vector<std::pair<std::string, std::string>>& values) {
    for (const auto& [name, value] : values) {
        const std::string placeholder = "{" + name + "}";
        const std::string encoded = url_encode(value);
        std::size_t pos = 0;
        while ((pos = tmpl.find(placeholder, pos)) != std::string::npos) {
            tmpl.replace(pos, placeholder.size(), encoded);
            pos += encoded.size();
        }
    }
    return tmpl;
}

// "http://host:port/path?q" -> {"http://host:port", "/path?q"}
std::pair<std::string, std::string> split_url(const std::string& url) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) throw UsageError("endpoint URL needs a scheme: " + url);
    const auto slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) return {url, "/"};
    return {url.substr(0, slash), url.substr(slash)};
}

// One limiter per (origin, rate) for the whole process, so consecutive
// providers against the same API share the request budget.
std::shared_ptr<RateLimiter> shared_limiter(const std::string& endpoint_url, double rate) {
    static std::mutex mutex;
    static std::map<std::pair<std::string, double>, std::shared_ptr<RateLimiter>> limiters;
    const auto key = std::make_pair(split_url(endpoint_url).first, rate);
    std::lock_guard lock(mutex);
    auto& slot = limiters[key];
    if (!slot) slot = std::make_shared<RateLimiter>(rate);
    return slot;
}

}  // namespace

RemoteProvider::RemoteProvider(ProviderConfig config) : config_(std::move(config)) {
    config_.validate();
    limiter_ = shared_limiter(config_.endpoint_url, config_.rate_limit_per_sec);
}

RemoteProvider::Response RemoteProvider::get_with_retries(const std::string& url) {
    const auto [base, path] = split_url(url);
    auto backoff = config_.backoff_initial;
    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        limiter_->acquire();
        ++requests_;
        httplib::Client client(base);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout).count();
        client.set_connection_timeout(std::max<long>(1, static_cast<long>(secs)), 0);
        client.set_read_timeout(std::max<long>(1, static_cast<long>(secs)), 0);
        httplib::Headers headers;
        if (!config_.api_key.empty()) headers.emplace(config_.api_key_header, config_.api_key);
        auto res = client.Get(path, headers);
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if ((res->status >= 200 && res->status < 300) || res->status == 404) return {res->status, res->body};
        throw TransportError("GET " + url + " failed with HTTP " + std::to_string(res->status));
    }
    throw TransportError("GET " + url + " failed after " + std::to_string(config_.max_retries) +
                         " retries (" + last_error + ")");
}

std::optional<PaperId> RemoteProvider::resolve_reference(const ReferenceRecord& record) {
    if (config_.resolve_url.empty()) throw UsageError("provider.resolve_url is required in remote mode");
    auto query = [&](const std::string& doi, const std::string& title) -> std::optional<PaperId> {
        const auto url = substitute(config_.resolve_url,
                                    {{"doi", doi},
                                     {"title", title},
                                     {"year", record.year ? std::to_string(*record.year) : std::string()}});
        auto res = get_with_retries(url);
        if (res.status == 404) return std::nullopt;
        try {
            return paper_id_from_json(nlohmann::json::parse(res.body));
        } catch (const nlohmann::json::exception& e) {
            throw TransportError("malformed resolve response from " + url + ": " + e.what());
        }
    };
    if (record.doi) {
        if (auto hit = query(*record.doi, "")) return hit;
    }
    return query("", record.title);
}

CitationPage RemoteProvider::fetch_citers(const PaperId& id, const std::optional<std::string>& cursor) {
    const auto url = substitute(config_.endpoint_url, {{"id", id.id},
                                                       {"cursor", cursor.value_or("")},
                                                       {"page_size", std::to_string(config_.page_size)}});
    auto res = get_with_retries(url);
    if (res.status == 404) throw NotFoundError("unknown paper id '" + id.id + "'");
    CitationPage page;
    page.target = id;
    try {
        const auto body = nlohmann::json::parse(res.body);
        if (body.contains("target") && body["target"].is_object()) page.target = paper_id_from_json(body["target"]);
        std::set<std::string> seen;
        for (const auto& c : body.at("citers")) {
            auto p = paper_id_from_json(c);
            if (p.id == id.id || !seen.insert(p.id).second) continue;
            page.citers.push_back(std::move(p));
        }
        if (body.contains("next_cursor") && !body["next_cursor"].is_null()) {
            auto next = body["next_cursor"].get<std::string>();
            if (!next.empty()) page.cursor = std::move(next);
        }
        page.complete = !page.cursor && body.value("complete", false);
    } catch (const nlohmann::json::exception& e) {
        throw TransportError("malformed citers response from " + url + ": " + e.what());
    }
    return page;
}

// ---------------------------------------------------------------------------
// CitationCache

CitationCache::CitationCache(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    if (!std::filesystem::exists(path_)) return;
    const std::string log = read_file(path_);
    std::size_t valid_end = 0;
    std::size_t start = 0;
    while (start < log.size()) {
        const auto end = log.find('\n', start);
        if (end == std::string::npos) break;
        const std::string line = log.substr(start, end - start);
        start = end + 1;
        if (line.empty()) {
            valid_end = start;
            continue;
        }
        try {
            const auto entry = nlohmann::json::parse(line);
            const auto kind = entry.at("kind").get<std::string>();
            if (kind == "page") {
                auto page = citation_page_from_json(entry.at("page"));
                pages_[{entry.at("target").get<std::string>(), entry.at("cursor").get<std::string>()}] = std::move(page);
            } else if (kind == "resolve") {
                std::optional<PaperId> result;
                if (!entry.at("result").is_null()) result = paper_id_from_json(entry["result"]);
                resolutions_[entry.at("key").get<std::string>()] = std::move(result);
            }
            valid_end = start;
        } catch (const std::exception&) {
            break;
        }
    }
    // Drop a torn tail left by an interrupted run so later appends stay parseable.
    if (valid_end < log.size()) std::filesystem::resize_file(path_, valid_end);
}

std::optional<CitationPage> CitationCache::find_page(const std::string& target,
                                                     const std::optional<std::string>& cursor) const {
    std::lock_guard lock(mutex_);
    auto it = pages_.find({target, cursor.value_or("")});
    if (it == pages_.end()) return std::nullopt;
    return it->second;
}

void CitationCache::store_page(const std::optional<std::string>& cursor, const CitationPage& page) {
    nlohmann::json entry;
    entry["kind"] = "page";
    entry["target"] = page.target.id;
    entry["cursor"] = cursor.value_or("");
    entry["page"] = to_json(page);
    std::lock_guard lock(mutex_);
    pages_[{page.target.id, cursor.value_or("")}] = page;
    append(entry);
}

std::optional<std::optional<PaperId>> CitationCache::find_resolution(const std::string& key) const {
    std::lock_guard lock(mutex_);
    auto it = resolutions_.find(key);
    if (it == resolutions_.end()) return std::nullopt;
    return it->second;
}

void CitationCache::store_resolution(const std::string& key, const std::optional<PaperId>& result) {
    nlohmann::json entry;
    entry["kind"] = "resolve";
    entry["key"] = key;
    entry["result"] = result ? to_json(*result) : nlohmann::json(nullptr);
    std::lock_guard lock(mutex_);
    resolutions_[key] = result;
    append(entry);
}

std::size_t CitationCache::size() const {
    std::lock_guard lock(mutex_);
    return pages_.size() + resolutions_.size();
}

void CitationCache::append(const nlohmann::json& entry) {
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) throw DataError("cannot append to cache " + path_.string());
    out << entry.dump() << '\n';
    out.flush();
}

// ---------------------------------------------------------------------------
// CachedProvider

CachedProvider::CachedProvider(std::unique_ptr<CitationProvider> inner, std::shared_ptr<CitationCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

std::optional<PaperId> CachedProvider::resolve_reference(const ReferenceRecord& record) {
    const auto key = dedup_key(record) + "|doi:" + record.doi.value_or("");
    if (auto hit = cache_->find_resolution(key)) return *hit;
    auto result = inner_->resolve_reference(record);
    cache_->store_resolution(key, result);
    return result;
}

CitationPage CachedProvider::fetch_citers(const PaperId& id, const std::optional<std::string>& cursor) {
    if (auto hit = cache_->find_page(id.id, cursor)) return *hit;
    auto page = inner_->fetch_citers(id, cursor);
    cache_->store_page(cursor, page);
    return page;
}

std::unique_ptr<CitationProvider> make_provider(ProviderConfig config) {
    if (const char* key = std::getenv("CITESCOPE_API_KEY"); key && *key) config.api_key = key;
    config.validate();
    std::unique_ptr<CitationProvider> provider;
    if (config.mode == ProviderMode::offline) {
        auto snapshot = std::make_shared<const Snapshot>(Snapshot::load(config.snapshot_path));
        provider = std::make_unique<OfflineProvider>(std::move(snapshot), config.page_size);
    } else {
        provider = std::make_unique<RemoteProvider>(config);
    }
    if (!config.cache_path.empty()) {
        provider = std::make_unique<CachedProvider>(std::move(provider),
                                                    std::make_shared<CitationCache>(config.cache_path));
    }
    return provider;
}

}  // namespace citescope
