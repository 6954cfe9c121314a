#include "sqlmbr/generators.hpp"

#include <cctype>
#include <cstdlib>
#include <optional>
#include <stdexcept>

#include <httplib.h>

#include "sqlmbr/serialize.hpp"

namespace sqlmbr {

// ---------------------------------------------------------------------------
// Replay
// ---------------------------------------------------------------------------

namespace {

Continuation continuation_from_json(const json& j, bool last_in_array) {
    if (j.is_string()) return Continuation{j.get<std::string>(), last_in_array, false};
    strict_keys(j, {"text", "final"}, "replay continuation");
    Continuation c;
    c.text = j.at("text").get<std::string>();
    c.final = j.value("final", last_in_array);
    return c;
}

}  // namespace

ReplayScript load_replay_script(const std::filesystem::path& file) {
    const json j = load_json_file(file);
    strict_keys(j, {"mode", "trajectories", "candidates"}, "replay script");
    ReplayScript s;
    const std::string mode = j.value("mode", "pipe");
    if (mode == "pipe")
        s.mode = ReplayScript::Mode::pipe;
    else if (mode == "flat")
        s.mode = ReplayScript::Mode::flat;
    else
        throw std::invalid_argument("replay script: unknown mode '" + mode + "'");

    if (s.mode == ReplayScript::Mode::pipe) {
        if (!j.contains("trajectories"))
            throw std::invalid_argument("replay script: pipe mode needs \"trajectories\"");
        for (const auto& [id, entries] : j.at("trajectories").items()) {
            std::vector<Continuation> conts;
            for (std::size_t i = 0; i < entries.size(); ++i)
                conts.push_back(continuation_from_json(entries[i], i + 1 == entries.size()));
            s.trajectories.emplace(id, std::move(conts));
        }
    } else {
        if (!j.contains("candidates"))
            throw std::invalid_argument("replay script: flat mode needs \"candidates\"");
        s.flat = j.at("candidates").get<std::vector<std::string>>();
    }
    return s;
}

std::vector<Continuation> ReplayGenerator::generate(const GenRequest& req) {
    if (req.k != 1)
        throw std::invalid_argument("replay generator serves one continuation per request");

    if (script_.mode == ReplayScript::Mode::flat) {
        // Whole query per trajectory slot: id "tN" maps to candidates[N].
        if (req.step != 0)
            throw std::runtime_error("replay script (flat) has no entry for trajectory " +
                                     req.trajectory_id + " step " + std::to_string(req.step));
        std::size_t idx = 0;
        if (req.trajectory_id.size() > 1 && req.trajectory_id[0] == 't') {
            const std::string digits = req.trajectory_id.substr(1);
            if (digits.find_first_not_of("0123456789") == std::string::npos)
                idx = static_cast<std::size_t>(std::stoul(digits));
            else
                throw std::runtime_error("replay script (flat) has no entry for trajectory " +
                                         req.trajectory_id);
        }
        if (idx >= script_.flat.size())
            throw std::runtime_error("replay script (flat) has no entry for trajectory " +
                                     req.trajectory_id);
        return {Continuation{script_.flat[idx], true, false}};
    }

    auto it = script_.trajectories.find(req.trajectory_id);
    if (it == script_.trajectories.end() ||
        static_cast<std::size_t>(req.step) >= it->second.size())
        throw std::runtime_error("replay script has no entry for trajectory " +
                                 req.trajectory_id + " step " + std::to_string(req.step));
    return {it->second[static_cast<std::size_t>(req.step)]};
}

// ---------------------------------------------------------------------------
// Fenced-block extraction
// ---------------------------------------------------------------------------

std::string extract_fenced_sql(std::string_view response) {
    struct Block {
        std::string tag;
        std::string body;
    };
    std::vector<Block> blocks;
    std::size_t pos = 0;
    while (true) {
        const std::size_t open = response.find("```", pos);
        if (open == std::string_view::npos) break;
        std::size_t body_start = open + 3;
        // Optional info string on the fence line.
        std::size_t tag_end = body_start;
        while (tag_end < response.size() &&
               (std::isalnum(static_cast<unsigned char>(response[tag_end])) ||
                response[tag_end] == '_' || response[tag_end] == '+' || response[tag_end] == '-'))
            ++tag_end;
        std::string tag(response.substr(body_start, tag_end - body_start));
        for (char& c : tag) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        std::size_t content = tag_end;
        if (content < response.size() && response[content] == '\r') ++content;
        if (content < response.size() && response[content] == '\n') ++content;

        const std::size_t close = response.find("```", content);
        if (close == std::string_view::npos) break;  // incomplete block
        std::string body(response.substr(content, close - content));
        while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
        blocks.push_back(Block{std::move(tag), std::move(body)});
        pos = close + 3;
    }
    if (blocks.empty()) return std::string(response);
    for (auto it = blocks.rbegin(); it != blocks.rend(); ++it)
        if (it->tag.rfind("sql", 0) == 0) return it->body;
    return blocks.back().body;
}

// ---------------------------------------------------------------------------
// HTTP client
// ---------------------------------------------------------------------------

HttpGenConfig load_http_config(const std::filesystem::path& file) {
    const json j = load_json_file(file);
    strict_keys(j,
                {"endpoint", "model", "temperature", "max_tokens", "stop", "api_key_env",
                 "timeout_ms", "retries", "batch", "text_pointer", "choices_pointer",
                 "text_field", "finish_reason_field"},
                "http generator config");
    HttpGenConfig c;
    c.endpoint = j.at("endpoint").get<std::string>();
    c.model = j.value("model", "");
    c.temperature = j.value("temperature", 0.7);
    c.max_tokens = j.value("max_tokens", 1024);
    if (j.contains("stop")) c.stop = j.at("stop").get<std::vector<std::string>>();
    if (c.stop.empty())
        throw std::invalid_argument("http config: at least one stop sequence is required");
    c.api_key_env = j.value("api_key_env", "");
    c.timeout = std::chrono::milliseconds(j.value("timeout_ms", std::int64_t{30000}));
    c.retries = j.value("retries", 1);
    c.batch = j.value("batch", false);
    c.text_pointer = j.value("text_pointer", c.text_pointer);
    c.choices_pointer = j.value("choices_pointer", c.choices_pointer);
    c.text_field = j.value("text_field", c.text_field);
    c.finish_reason_field = j.value("finish_reason_field", c.finish_reason_field);
    if (c.temperature < 0) throw std::invalid_argument("http config: temperature must be >= 0");
    return c;
}

namespace {

struct SplitUrl {
    std::string base;  // scheme://host[:port]
    std::string path;  // /path or /
};

SplitUrl split_url(const std::string& endpoint) {
    const std::size_t scheme = endpoint.find("://");
    if (scheme == std::string::npos)
        throw std::invalid_argument("http config: endpoint must include scheme: " + endpoint);
    const std::size_t slash = endpoint.find('/', scheme + 3);
    if (slash == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, slash), endpoint.substr(slash)};
}

// Final unless the sample was cut at a stop sequence; without a finish
// reason, a trailing semicolon marks a complete query.
bool infer_final(const json& choice, const std::string& finish_field, const std::string& text) {
    if (choice.is_object() && !finish_field.empty() && choice.contains(finish_field)) {
        const std::string reason = choice.at(finish_field).get<std::string>();
        return reason != "stop_sequence";
    }
    for (auto it = text.rbegin(); it != text.rend(); ++it) {
        if (std::isspace(static_cast<unsigned char>(*it))) continue;
        return *it == ';';
    }
    return false;
}

Continuation parse_sample(const HttpGenConfig& cfg, const std::string& body, bool batch,
                          std::size_t index) {
    json resp = json::parse(body, nullptr, /*allow_exceptions=*/false);
    if (resp.is_discarded()) return Continuation{"", false, true};
    try {
        json choice;
        std::string text;
        if (batch) {
            const json& choices = resp.at(json::json_pointer(cfg.choices_pointer));
            choice = choices.at(index);
            text = choice.at(cfg.text_field).get<std::string>();
        } else {
            text = resp.at(json::json_pointer(cfg.text_pointer)).get<std::string>();
            // The choice object, for the finish reason, is the pointer's parent.
            json::json_pointer p(cfg.text_pointer);
            choice = p.empty() ? resp : resp.at(p.parent_pointer());
        }
        Continuation c;
        c.text = extract_fenced_sql(text);
        c.final = infer_final(choice, cfg.finish_reason_field, text);
        return c;
    } catch (const json::exception&) {
        return Continuation{"", false, true};
    }
}

}  // namespace

std::vector<Continuation> HttpGenerator::generate(const GenRequest& req) {
    const SplitUrl url = split_url(config_.endpoint);
    httplib::Client client(url.base);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    client.set_connection_timeout(secs.count(), 0);
    client.set_read_timeout(secs.count(), 0);

    httplib::Headers headers;
    if (!config_.api_key_env.empty()) {
        if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
            headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    json body{{"model", config_.model},
              {"prompt", req.context + req.prefix},
              {"temperature", config_.temperature},
              {"max_tokens", config_.max_tokens},
              {"stop", config_.stop}};

    auto post_once = [&](const json& b) -> std::optional<std::string> {
        for (int attempt = 0; attempt <= config_.retries; ++attempt) {
            auto res = client.Post(url.path, headers, b.dump(), "application/json");
            if (res && res->status >= 200 && res->status < 300) return res->body;
        }
        return std::nullopt;
    };

    std::vector<Continuation> out;
    out.reserve(static_cast<std::size_t>(req.k));
    if (config_.batch) {
        json b = body;
        b["n"] = req.k;
        const auto resp = post_once(b);
        for (int i = 0; i < req.k; ++i)
            out.push_back(resp ? parse_sample(config_, *resp, true, static_cast<std::size_t>(i))
                               : Continuation{"", false, true});
        return out;
    }
    for (int i = 0; i < req.k; ++i) {
        const auto resp = post_once(body);
        out.push_back(resp ? parse_sample(config_, *resp, false, 0)
                           : Continuation{"", false, true});
    }
    return out;
}

}  // namespace sqlmbr
