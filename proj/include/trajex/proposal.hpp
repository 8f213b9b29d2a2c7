#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "trajex/config.hpp"
#include "trajex/errors.hpp"
#include "trajex/image.hpp"
#include "trajex/image_io.hpp"

namespace trajex {

enum class Category { Hand, Tool, Object };

inline const char* category_name(Category c) {
    switch (c) {
        case Category::Hand: return "hand";
        case Category::Tool: return "tool";
        case Category::Object: return "object";
    }
    return "?";
}

inline Category category_from_name(const std::string& s) {
    if (s == "hand") return Category::Hand;
    if (s == "tool") return Category::Tool;
    if (s == "object") return Category::Object;
    throw Error(ErrorCode::Validation, "unknown category '" + s + "'");
}

// A labeled seed point in resized-frame pixel coordinates, origin top-left.
struct Keypoint {
    std::string label;
    Category category = Category::Object;
    Vec2 pos;
    double confidence = 1.0;
};

struct ProposalResult {
    int frame_index = 0;
    std::vector<Keypoint> keypoints;
    std::string model_id;
    std::string raw_response;
    std::string prompt_id;
};

struct PromptTemplate {
    std::string id;
    std::vector<Category> category_set;
    std::string text;  // placeholders: {task}, {width}, {height}
};

namespace detail {

inline const char* kSchemaBlock =
    "Reply with exactly one JSON object of the form\n"
    "{\"keypoints\": [{\"label\": \"wrist\", \"category\": \"hand\", "
    "\"x\": 0.50, \"y\": 0.50, \"confidence\": 0.9}]}\n"
    "where x and y are normalized coordinates in [0,1] measured from the "
    "top-left corner (x rightward, y downward), category is one of "
    "\"hand\", \"tool\", \"object\", and labels are unique.";

inline const std::map<std::string, PromptTemplate>& prompt_registry() {
    static const std::map<std::string, PromptTemplate> reg = [] {
        std::map<std::string, PromptTemplate> r;
        r["grasp_v1"] = PromptTemplate{
            "grasp_v1",
            {Category::Hand, Category::Tool, Category::Object},
            "The image is one frame ({width}x{height} pixels) of a human "
            "performing this task: {task}.\n"
            "Propose keypoints for every task-relevant entity:\n"
            "- hand: exactly one point labeled \"wrist\" at the wrist joint, "
            "plus fingertip points (\"thumb_tip\", \"index_tip\", ...) when visible.\n"
            "- tool: the working tip and the grip of any tool in use "
            "(\"tool_tip\", \"tool_grip\").\n"
            "- object: salient contour points of the manipulated object "
            "(\"object_center\", \"object_edge_left\", ...).\n"
            "{schema}"};
        r["hand_only_v1"] = PromptTemplate{
            "hand_only_v1",
            {Category::Hand},
            "The image is one frame ({width}x{height} pixels) of a human "
            "performing this task: {task}.\n"
            "Propose hand keypoints only: exactly one point labeled \"wrist\" "
            "at the wrist joint, plus visible fingertips.\n"
            "{schema}"};
        r["hand_presence_v1"] = PromptTemplate{
            "hand_presence_v1",
            {Category::Hand},
            "The image is one frame ({width}x{height} pixels) of a video of "
            "this task: {task}.\n"
            "Is a human hand clearly visible in this frame? Answer with the "
            "single word yes or no."};
        return r;
    }();
    return reg;
}

inline void replace_all(std::string& s, const std::string& from, const std::string& to) {
    size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
}

}  // namespace detail

inline const PromptTemplate& get_template(const std::string& id) {
    const auto& reg = detail::prompt_registry();
    auto it = reg.find(id);
    if (it == reg.end()) throw Error(ErrorCode::UnknownTemplate, id);
    return it->second;
}

inline std::string build_prompt(const PromptTemplate& tmpl, const std::string& task,
                                int width, int height) {
    if (width < 1 || height < 1)
        throw Error(ErrorCode::InvalidValue, "prompt dims must be positive");
    std::string out = tmpl.text;
    detail::replace_all(out, "{task}", task);
    detail::replace_all(out, "{width}", std::to_string(width));
    detail::replace_all(out, "{height}", std::to_string(height));
    detail::replace_all(out, "{schema}", detail::kSchemaBlock);
    return out;
}

// A vision-language backend. complete() returns the assistant message text
// for one frame + prompt. Implementations must be safe to share across
// threads; per-call state lives on the caller's stack.
class VlmBackend {
public:
    virtual ~VlmBackend() = default;
    virtual std::string complete(const Frame& frame, const std::string& prompt,
                                 const std::string& prompt_id) = 0;
    virtual std::string model_id() const = 0;
};

// Deterministic fixture-backed backend: a pure function of
// (frame_index, prompt_id). Fixture format is documented in docs/mock_backend.md.
class MockBackend : public VlmBackend {
public:
    explicit MockBackend(const std::string& fixture_path) {
        std::ifstream in(fixture_path);
        if (!in) throw Error(ErrorCode::Io, fixture_path + ": cannot open mock fixture");
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::ConfigParse, fixture_path + ": " + e.what());
        }
        if (doc.value("version", 0) != 1)
            throw Error(ErrorCode::SchemaVersionUnsupported, "mock fixture version must be 1");
        const nlohmann::json defaults = doc.value("defaults", nlohmann::json::object());
        for (const auto& [pid, resp] : defaults.items())
            defaults_[pid] = resp.get<std::string>();
        const nlohmann::json entries = doc.value("entries", nlohmann::json::array());
        for (const auto& e : entries) {
            entries_[{e.at("frame_index").get<int>(), e.at("prompt_id").get<std::string>()}] =
                e.at("response").get<std::string>();
        }
    }

    std::string complete(const Frame& frame, const std::string&,
                         const std::string& prompt_id) override {
        call_count_.fetch_add(1);
        auto it = entries_.find({frame.index, prompt_id});
        if (it != entries_.end()) return it->second;
        auto d = defaults_.find(prompt_id);
        if (d != defaults_.end()) return d->second;
        throw Error(ErrorCode::Backend, "mock fixture has no entry for frame " +
                                            std::to_string(frame.index) + ", prompt '" +
                                            prompt_id + "'");
    }

    std::string model_id() const override { return "mock"; }
    int call_count() const { return call_count_.load(); }

private:
    std::map<std::pair<int, std::string>, std::string> entries_;
    std::map<std::string, std::string> defaults_;
    std::atomic<int> call_count_{0};
};

// Test hook: throws a transient error the first `fail_count` calls, then
// delegates. Lives here so the retry contract can be exercised without HTTP.
class FlakyBackend : public VlmBackend {
public:
    FlakyBackend(std::shared_ptr<VlmBackend> inner, int fail_count, int status = 503)
        : inner_(std::move(inner)), remaining_failures_(fail_count), status_(status) {}

    std::string complete(const Frame& frame, const std::string& prompt,
                         const std::string& prompt_id) override {
        call_count_.fetch_add(1);
        if (remaining_failures_.fetch_sub(1) > 0)
            throw TransientBackendError(status_, "injected transient failure");
        return inner_->complete(frame, prompt, prompt_id);
    }

    std::string model_id() const override { return inner_->model_id(); }
    int call_count() const { return call_count_.load(); }

private:
    std::shared_ptr<VlmBackend> inner_;
    std::atomic<int> remaining_failures_;
    std::atomic<int> call_count_{0};
    int status_;
};

// Retry wrapper: transient failures (429/5xx) are retried with exponential
// backoff up to cfg.max_retries; anything else surfaces immediately.
inline std::string backend_complete(VlmBackend& backend, const Frame& frame,
                                    const std::string& prompt, const std::string& prompt_id,
                                    const BackendConfig& cfg) {
    int attempt = 0;
    for (;;) {
        try {
            return backend.complete(frame, prompt, prompt_id);
        } catch (const TransientBackendError& e) {
            if (attempt >= cfg.max_retries)
                throw Error(ErrorCode::Backend,
                            "gave up after " + std::to_string(attempt + 1) +
                                " attempts (status " + std::to_string(e.status()) + ")");
            std::this_thread::sleep_for(
                std::chrono::milliseconds(cfg.retry_base_ms << attempt));
            ++attempt;
        }
    }
}

struct ParsedRecord {
    std::string label;
    std::string category;
    double x = 0.0;  // normalized
    double y = 0.0;
    double confidence = 1.0;
    bool has_confidence = false;
};

// Extract the first balanced {...} block containing a "keypoints" array from
// prose-wrapped model output. ParseError carries the byte offset of the
// offending block (or 0 when no block exists).
inline std::vector<ParsedRecord> parse_response(const std::string& text) {
    size_t search_from = 0;
    std::string last_reason = "no JSON object found in response";
    size_t last_offset = 0;
    while (true) {
        size_t start = text.find('{', search_from);
        if (start == std::string::npos)
            throw Error(ErrorCode::ResponseParse,
                        "offset " + std::to_string(last_offset) + ": " + last_reason);
        // Balanced-brace scan, string-aware.
        int depth = 0;
        bool in_str = false, esc = false;
        size_t end = std::string::npos;
        for (size_t i = start; i < text.size(); ++i) {
            char c = text[i];
            if (in_str) {
                if (esc) esc = false;
                else if (c == '\\') esc = true;
                else if (c == '"') in_str = false;
            } else if (c == '"') {
                in_str = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                if (--depth == 0) { end = i; break; }
            }
        }
        if (end == std::string::npos) {
            last_reason = "unbalanced braces";
            last_offset = start;
            search_from = start + 1;
            continue;
        }
        std::string block = text.substr(start, end - start + 1);
        search_from = start + 1;
        last_offset = start;
        nlohmann::json doc = nlohmann::json::parse(block, nullptr, false);
        if (doc.is_discarded()) {
            last_reason = "malformed JSON block";
            continue;
        }
        if (!doc.is_object() || !doc.contains("keypoints")) {
            last_reason = "JSON object lacks a 'keypoints' array";
            continue;
        }
        const auto& arr = doc["keypoints"];
        if (!arr.is_array()) {
            last_reason = "'keypoints' is not an array";
            continue;
        }
        std::vector<ParsedRecord> out;
        size_t idx = 0;
        for (const auto& kp : arr) {
            auto fail = [&](const std::string& why) -> Error {
                return Error(ErrorCode::ResponseParse, "offset " + std::to_string(start) +
                                                           ": keypoint " + std::to_string(idx) +
                                                           ": " + why);
            };
            if (!kp.is_object()) throw fail("not an object");
            ParsedRecord r;
            if (!kp.contains("label") || !kp["label"].is_string()) throw fail("missing label");
            r.label = kp["label"].get<std::string>();
            if (!kp.contains("category") || !kp["category"].is_string())
                throw fail("missing category");
            r.category = kp["category"].get<std::string>();
            if (r.category != "hand" && r.category != "tool" && r.category != "object")
                throw fail("category '" + r.category + "' not in {hand,tool,object}");
            if (!kp.contains("x") || !kp["x"].is_number()) throw fail("non-numeric x");
            if (!kp.contains("y") || !kp["y"].is_number()) throw fail("non-numeric y");
            r.x = kp["x"].get<double>();
            r.y = kp["y"].get<double>();
            if (kp.contains("confidence")) {
                if (!kp["confidence"].is_number()) throw fail("non-numeric confidence");
                r.confidence = kp["confidence"].get<double>();
                r.has_confidence = true;
            }
            out.push_back(std::move(r));
            ++idx;
        }
        return out;
    }
}

// Range checks, duplicate-label rejection, normalized -> pixel conversion.
// Reports every violation, not just the first.
inline ProposalResult validate_proposal(const std::vector<ParsedRecord>& records,
                                        int width, int height) {
    std::vector<std::string> violations;
    if (records.empty()) violations.push_back("empty keypoint set");
    std::map<std::string, int> seen;
    for (size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.label.empty()) violations.push_back("index " + std::to_string(i) + ": empty label");
        if (++seen[r.label] == 2)
            violations.push_back("duplicate label '" + r.label + "'");
        if (r.x < 0.0 || r.x > 1.0)
            violations.push_back("index " + std::to_string(i) + ": x out of range [0,1]");
        if (r.y < 0.0 || r.y > 1.0)
            violations.push_back("index " + std::to_string(i) + ": y out of range [0,1]");
        if (r.has_confidence && (r.confidence < 0.0 || r.confidence > 1.0))
            violations.push_back("index " + std::to_string(i) + ": confidence out of range");
    }
    if (!violations.empty()) {
        std::string msg;
        for (const auto& v : violations) msg += (msg.empty() ? "" : "; ") + v;
        throw Error(ErrorCode::Validation, msg);
    }
    ProposalResult res;
    for (const auto& r : records) {
        Keypoint kp;
        kp.label = r.label;
        kp.category = category_from_name(r.category);
        // 0 and 1 map to first/last pixel centers.
        kp.pos = {r.x * (width - 1), r.y * (height - 1)};
        kp.confidence = r.has_confidence ? r.confidence : 1.0;
        res.keypoints.push_back(std::move(kp));
    }
    return res;
}

// Full proposal round: backend call (with retries), parse, validate, convert
// to resized-frame pixel space, cap keypoint count. `dims` is the resized
// frame geometry that tracking will run at.
inline ProposalResult propose_keypoints(VlmBackend& backend, const Frame& frame,
                                        const std::string& prompt, const std::string& prompt_id,
                                        std::pair<int, int> dims, const PipelineConfig& cfg) {
    std::string raw = backend_complete(backend, frame, prompt, prompt_id, cfg.backend);
    auto records = parse_response(raw);
    ProposalResult res = validate_proposal(records, dims.first, dims.second);
    if (static_cast<int>(res.keypoints.size()) > cfg.backend.max_keypoints)
        res.keypoints.resize(cfg.backend.max_keypoints);
    const auto& cats = get_template(prompt_id).category_set;
    if (std::find(cats.begin(), cats.end(), Category::Hand) != cats.end()) {
        int wrists = 0;
        for (const auto& kp : res.keypoints)
            if (kp.label == cfg.wrist_label && kp.category == Category::Hand) ++wrists;
        if (wrists != 1)
            throw Error(ErrorCode::Validation,
                        "expected exactly one '" + cfg.wrist_label + "' hand keypoint, got " +
                            std::to_string(wrists));
    }
    res.frame_index = frame.index;
    res.model_id = backend.model_id();
    res.raw_response = raw;
    res.prompt_id = prompt_id;
    return res;
}

// Yes/no hand-presence query on one frame.
inline bool query_hand_presence(VlmBackend& backend, const Frame& frame,
                                const PipelineConfig& cfg) {
    std::string prompt =
        build_prompt(get_template("hand_presence_v1"), cfg.task, frame.width, frame.height);
    std::string reply =
        backend_complete(backend, frame, prompt, "hand_presence_v1", cfg.backend);
    size_t i = reply.find_first_not_of(" \t\r\n");
    if (i == std::string::npos) return false;
    std::string word;
    for (; i < reply.size() && std::isalpha(static_cast<unsigned char>(reply[i])); ++i)
        word.push_back(static_cast<char>(std::tolower(reply[i])));
    return word == "yes";
}

}  // namespace trajex
