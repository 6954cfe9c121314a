#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sqlmbr/pipe.hpp"

namespace sqlmbr {

// ---------------------------------------------------------------------------
// Deterministic file replay
// ---------------------------------------------------------------------------

/// Scripted continuations for tests and benchmarks. Pipe mode maps each
/// trajectory id to its ordered continuations (the last entry completes the
/// trajectory unless an entry says otherwise); flat mode holds whole queries,
/// one per trajectory, for non-pipe workflows.
struct ReplayScript {
    enum class Mode { pipe, flat };
    Mode mode = Mode::pipe;
    std::map<std::string, std::vector<Continuation>> trajectories;
    std::vector<std::string> flat;
};

ReplayScript load_replay_script(const std::filesystem::path& file);

class ReplayGenerator : public Generator {
public:
    explicit ReplayGenerator(ReplayScript script) : script_(std::move(script)) {}

    /// Scripted continuation for (trajectory id, step). A request outside the
    /// script is a hard error naming the trajectory and step.
    std::vector<Continuation> generate(const GenRequest& request) override;

    const ReplayScript& script() const { return script_; }

private:
    ReplayScript script_;
};

// ---------------------------------------------------------------------------
// HTTP text-completion client
// ---------------------------------------------------------------------------

struct HttpGenConfig {
    std::string endpoint;  // full URL, e.g. http://host:8080/v1/completions
    std::string model;
    double temperature = 0.7;
    int max_tokens = 1024;
    std::vector<std::string> stop = {"|>"};
    std::string api_key_env;  // name of the env var holding the key; never a flag
    std::chrono::milliseconds timeout{30000};
    int retries = 1;     // one extra attempt per sample at most
    bool batch = false;  // single request with n=k instead of k requests
    std::string text_pointer = "/choices/0/text";     // single-sample response text
    std::string choices_pointer = "/choices";         // batch response array
    std::string text_field = "text";                  // text field inside each choice
    std::string finish_reason_field = "finish_reason";  // optional; "stop" => final
};

HttpGenConfig load_http_config(const std::filesystem::path& file);

/// Last complete fenced code block of a response (```sql preferred), or the
/// input unchanged when no complete block exists.
std::string extract_fenced_sql(std::string_view response);

class HttpGenerator : public Generator {
public:
    explicit HttpGenerator(HttpGenConfig config) : config_(std::move(config)) {}

    /// Issues k sampling requests (or one batched request). Transport errors
    /// and malformed responses yield failed continuations, never aborting
    /// the batch. Fenced SQL blocks are extracted from each sample.
    std::vector<Continuation> generate(const GenRequest& request) override;

private:
    HttpGenConfig config_;
};

}  // namespace sqlmbr
