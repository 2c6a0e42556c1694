#include "muse/service/server.hpp"

#include "muse/eval/evaluation.hpp"
#include "muse/pipeline/analysis.hpp"
// Last: <resolv.h> defines an _res macro that breaks Eigen headers.
#include "httplib.h"

namespace muse::service {

namespace {

using nlohmann::json;

// A thrown HTTP-level failure with its ApiError body.
struct HttpError {
    int status;
    std::string code;
    std::string message;
    json detail = nullptr;
};

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

json api_error(const std::string& code, const std::string& message, const json& detail = nullptr) {
    json j = {{"code", code}, {"message", message}};
    if (!detail.is_null()) j["detail"] = detail;
    return j;
}

int status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::UnknownSession: return 404;
        case ErrorCode::BackendTimeout: return 504;
        case ErrorCode::BackendError: return 502;
        case ErrorCode::IoError: return 500;
        default: return 400;
    }
}

const char* default_code(int status) {
    switch (status) {
        case 400: return "BadRequest";
        case 404: return "NotFound";
        case 405: return "MethodNotAllowed";
        case 413: return "PayloadTooLarge";
        case 503: return "ServiceUnavailable";
        default: return status >= 500 ? "InternalError" : "HttpError";
    }
}

const httplib::MultipartFormData& upload(const httplib::Request& req, const std::string& field) {
    if (!req.is_multipart_form_data())
        throw HttpError{400, "BadRequest", "expected multipart/form-data with a '" + field + "' file"};
    if (!req.has_file(field)) throw HttpError{400, "BadRequest", "missing '" + field + "' upload"};
    return req.files.find(field)->second;
}

std::string file_name(const httplib::MultipartFormData& f, const std::string& field) {
    if (f.filename.empty()) throw HttpError{400, "BadRequest", "upload '" + field + "' needs a file name"};
    return f.filename;
}

double tempo_field(const httplib::Request& req, double fallback) {
    std::string text;
    if (req.has_file("tempo_bpm")) text = req.get_file_value("tempo_bpm").content;
    else if (req.has_param("tempo_bpm")) text = req.get_param_value("tempo_bpm");
    if (text.empty()) return fallback;
    try {
        const double t = std::stod(text);
        if (t > 0.0) return t;
    } catch (const std::exception&) {
    }
    throw HttpError{400, "BadRequest", "tempo_bpm must be a positive number"};
}

size_t limit_param(const httplib::Request& req, size_t fallback) {
    if (!req.has_param("limit")) return fallback;
    try {
        const long v = std::stol(req.get_param_value("limit"));
        if (v >= 0) return static_cast<size_t>(v);
    } catch (const std::exception&) {
    }
    throw HttpError{400, "BadRequest", "limit must be a non-negative integer"};
}

json parse_body(const httplib::Request& req) {
    try {
        return json::parse(req.body);
    } catch (const json::exception& e) {
        throw HttpError{400, "BadRequest", std::string("malformed JSON body: ") + e.what()};
    }
}

}  // namespace

struct Service::Impl {
    ServiceConfig config;
    agent::Agent agent;
    httplib::Server server;

    Impl(ServiceConfig c, agent::AgentConfig a) : config(std::move(c)), agent(std::move(a)) { routes(); }

    // Runs a handler, turning every failure into an ApiError response.
    template <class F>
    httplib::Server::Handler wrap(F&& body) {
        return [this, body = std::forward<F>(body)](const httplib::Request& req, httplib::Response& res) {
            try {
                body(req, res);
            } catch (const HttpError& e) {
                send_json(res, e.status, api_error(e.code, e.message, e.detail));
            } catch (const agent::ModuleFailure& e) {
                send_json(res, 400, api_error("ModuleFailure", e.what(), {{"stage", e.stage()}}));
            } catch (const Error& e) {
                send_json(res, status_for(e.code()), api_error(std::string(to_string(e.code())), e.what()));
            } catch (const std::exception& e) {
                send_json(res, 500, api_error("InternalError", e.what()));
            }
        };
    }

    pipeline::AnalysisOptions analysis(const httplib::Request& req) const {
        pipeline::AnalysisOptions o = agent.config().analysis;
        o.tempo_bpm = tempo_field(req, config.tempo_bpm);
        return o;
    }

    const retrieval::LibraryIndex& library() const {
        if (!agent.config().library) throw HttpError{503, "ServiceUnavailable", "no library configured"};
        return *agent.config().library;
    }

    json hits_json(const std::vector<retrieval::RetrievalHit>& hits) const {
        return retrieval::hits_to_json(library(), hits);
    }

    // Score plus performance uploads, aligned.
    std::pair<ReferenceEvents, align::AlignmentResult> aligned(const httplib::Request& req, std::string* piece) {
        const auto& score_file = upload(req, "score");
        const auto& perf_file = upload(req, "performance");
        const std::string score_name = file_name(score_file, "score"), perf_name = file_name(perf_file, "performance");
        if (pipeline::kind_of(score_name) != pipeline::FileKind::Score)
            throw HttpError{400, "BadRequest", "score must be .abc, .xml, .musicxml or .mxl"};
        const auto kind = pipeline::kind_of(perf_name);
        if (kind == pipeline::FileKind::Score || kind == pipeline::FileKind::Unknown)
            throw HttpError{400, "BadRequest", "performance must be .wav, .mid, .midi or notes .json"};
        const auto options = analysis(req);
        const Score score = pipeline::parse_score(score_file.content, score_name);
        if (piece) *piece = score.title.empty() ? score_name : score.title;
        const auto reference = score_to_reference(score, options.tempo_bpm);
        return {reference, pipeline::align_file(reference, perf_file.content, perf_name, options)};
    }

    void routes() {
        server.set_payload_max_length(config.max_body_bytes);
        server.set_read_timeout(config.request_timeout_sec, 0);
        server.set_write_timeout(config.request_timeout_sec, 0);
        server.set_default_headers({{"Access-Control-Allow-Origin", config.cors_origin},
                                    {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                    {"Access-Control-Allow-Headers", "Content-Type"}});
        server.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
        server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (res.body.empty())
                send_json(res, res.status, api_error(default_code(res.status), httplib::status_message(res.status)));
        });

        server.Get("/health", wrap([](const httplib::Request&, httplib::Response& res) {
                       send_json(res, 200, {{"status", "ok"}});
                   }));

        server.Post("/transcribe", wrap([this](const httplib::Request& req, httplib::Response& res) {
                        const auto& f = upload(req, "audio");
                        const auto tr = dsp::baseline_transcribe(dsp::load_wav(f.content), analysis(req).transcriber);
                        send_json(res, 200, {{"notes", pipeline::notes_to_json(tr.notes)}});
                    }));

        server.Post("/align", wrap([this](const httplib::Request& req, httplib::Response& res) {
                        send_json(res, 200, align::to_json(aligned(req, nullptr).second));
                    }));

        server.Post("/evaluate", wrap([this](const httplib::Request& req, httplib::Response& res) {
                        std::string piece;
                        const auto [reference, alignment] = aligned(req, &piece);
                        const auto report = eval::evaluate_performance(reference, alignment, piece);
                        res.status = 200;
                        res.set_content(eval::to_json(report).dump(), "application/json");
                    }));

        server.Get("/library/search", wrap([this](const httplib::Request& req, httplib::Response& res) {
                       if (!req.has_param("q")) throw HttpError{400, "BadRequest", "missing query parameter q"};
                       const std::string q = req.get_param_value("q");
                       const auto hits = retrieval::search_explicit(library(), q, {0.5, 0.95, limit_param(req, 10)});
                       send_json(res, 200, {{"query", q}, {"hits", hits_json(hits)}});
                   }));

        server.Post("/library/match", wrap([this](const httplib::Request& req, httplib::Response& res) {
                        const auto notes = pipeline::notes_from_json(parse_body(req));
                        const auto hits = retrieval::match_implicit(library(), notes, {limit_param(req, 10)});
                        send_json(res, 200, {{"hits", hits_json(hits)}});
                    }));

        server.Post("/agent/session", wrap([this](const httplib::Request&, httplib::Response& res) {
                        send_json(res, 201, {{"session_id", agent.open_session()}});
                    }));

        server.Post("/agent/message", wrap([this](const httplib::Request& req, httplib::Response& res) {
                        std::string session_id, text;
                        std::vector<agent::Attachment> attachments;
                        if (req.is_multipart_form_data()) {
                            for (const auto& [field, part] : req.files) {
                                if (field == "session_id") session_id = part.content;
                                else if (field == "text") text = part.content;
                                else attachments.push_back({file_name(part, field), part.content});
                            }
                        } else {
                            const json body = parse_body(req);
                            if (!body.is_object() || !body.contains("session_id") || !body["session_id"].is_string() ||
                                !body.contains("text") || !body["text"].is_string())
                                throw HttpError{400, "BadRequest", "body needs string session_id and text"};
                            session_id = body["session_id"];
                            text = body["text"];
                        }
                        if (session_id.empty()) throw HttpError{400, "BadRequest", "missing session_id"};
                        const auto turn = agent.run_turn(session_id, text, attachments);
                        nlohmann::ordered_json out;
                        out["session_id"] = session_id;
                        out["turn"] = turn.turn;
                        out["intent"] = agent::to_json(turn.intent);
                        out["response"] = turn.response;
                        out["trace"] = nlohmann::ordered_json::array();
                        for (const auto& s : turn.trace) out["trace"].push_back(agent::to_json(s));
                        res.status = 200;
                        res.set_content(out.dump(), "application/json");
                    }));

        server.Get("/agent/memory", wrap([this](const httplib::Request& req, httplib::Response& res) {
                       if (!req.has_param("session_id")) throw HttpError{400, "BadRequest", "missing session_id"};
                       std::optional<agent::MemoryKind> kind;
                       if (req.has_param("kind")) {
                           kind = agent::memory_kind_from_string(req.get_param_value("kind"));
                           if (!kind) throw HttpError{400, "BadRequest", "unknown memory kind"};
                       }
                       const std::string id = req.get_param_value("session_id");
                       nlohmann::ordered_json out;
                       out["session_id"] = id;
                       out["entries"] = nlohmann::ordered_json::array();
                       for (const auto& e : agent.memory_query(id, kind, limit_param(req, 0)))
                           out["entries"].push_back(agent::to_json(e));
                       res.status = 200;
                       res.set_content(out.dump(), "application/json");
                   }));
    }
};

Service::Service(ServiceConfig config) : Service(config, agent_config(config)) {}

Service::Service(ServiceConfig config, agent::AgentConfig agent)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(agent))) {}

Service::~Service() = default;

int Service::bind() {
    const auto& c = impl_->config;
    if (c.port == 0) return impl_->server.bind_to_any_port(c.host);
    if (!impl_->server.bind_to_port(c.host, c.port))
        throw Error(ErrorCode::IoError, "cannot bind " + c.host + ":" + std::to_string(c.port));
    return c.port;
}

void Service::listen() { impl_->server.listen_after_bind(); }
void Service::stop() { impl_->server.stop(); }
void Service::wait_until_ready() { impl_->server.wait_until_ready(); }

}  // namespace muse::service
