#include "liverec/liverec.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <sstream>
#include <string>

#include "bench.hpp"
#include "http_server.hpp"
#include "service.hpp"

#ifndef LIVEREC_DEFAULT_MOCK_ADAPTER
#define LIVEREC_DEFAULT_MOCK_ADAPTER "mock-adapter"
#endif

struct lr_engine {
  std::unique_ptr<liverec::ProbeService> service;
};

struct lr_server {
  std::unique_ptr<liverec::HttpServer> http;
};

namespace {

thread_local std::string last_error;

lr_status fail(lr_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

// Maps the exception in flight onto a status code.
lr_status from_exception() {
  try {
    throw;
  } catch (const liverec::UnknownLanguage &e) {
    return fail(LR_UNKNOWN_LANGUAGE, e.what());
  } catch (const liverec::Superseded &e) {
    return fail(LR_SUPERSEDED, e.what());
  } catch (const liverec::BackendError &e) {
    return fail(LR_INVALID_ARGUMENT, e.what());
  } catch (const std::invalid_argument &e) {
    return fail(LR_INVALID_ARGUMENT, e.what());
  } catch (const liverec::Error &e) {
    return fail(LR_ENGINE, e.what());
  } catch (const std::exception &e) {
    return fail(LR_INTERNAL, e.what());
  } catch (...) {
    return fail(LR_INTERNAL, "unknown exception");
  }
}

char *copy_out(const std::string &text) {
  char *out = static_cast<char *>(std::malloc(text.size() + 1));
  if (!out)
    throw std::bad_alloc();
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

std::vector<std::string> split_commas(const char *text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty())
      out.push_back(item);
  return out;
}

// Unavailable backends surface as their own code rather than a bad argument.
lr_status guarded_backend(lr_engine *engine, const char *language, const liverec::Backend **out) {
  const auto *b = engine->service->registry().find(language);
  if (!b)
    return fail(LR_UNKNOWN_LANGUAGE, std::string("unknown language '") + language + "'");
  if (auto why = b->unavailable_reason())
    return fail(LR_UNAVAILABLE, "backend '" + b->id() + "' is unavailable: " + *why);
  *out = b;
  return LR_OK;
}

} // namespace

extern "C" {

const char *lr_status_str(lr_status status) {
  switch (status) {
  case LR_OK:
    return "ok";
  case LR_INVALID_ARGUMENT:
    return "invalid argument";
  case LR_UNKNOWN_LANGUAGE:
    return "unknown language";
  case LR_SUPERSEDED:
    return "superseded";
  case LR_UNAVAILABLE:
    return "backend unavailable";
  case LR_IO:
    return "i/o error";
  case LR_ENGINE:
    return "engine error";
  case LR_INTERNAL:
    return "internal error";
  }
  return "unknown status";
}

const char *lr_last_error(void) { return last_error.c_str(); }

void lr_string_free(char *text) { std::free(text); }

lr_status lr_engine_create(const lr_engine_options *options, lr_engine **out) {
  if (!out)
    return fail(LR_INVALID_ARGUMENT, "out is NULL");
  *out = nullptr;
  lr_engine_options opts{};
  if (options)
    opts = *options;
  try {
    liverec::BackendContext ctx;
    if (opts.work_dir)
      ctx.work_dir = opts.work_dir;
    if (opts.python)
      ctx.python = opts.python;
    if (opts.mock_adapter)
      ctx.mock_adapter = opts.mock_adapter;
    else if (const char *env = std::getenv("LIVEREC_MOCK_ADAPTER"); env && *env)
      ctx.mock_adapter = env;
    else
      ctx.mock_adapter = LIVEREC_DEFAULT_MOCK_ADAPTER;

    auto registry = liverec::BackendRegistry::builtin(ctx);
    if (opts.backend_dir)
      registry.add_directory(opts.backend_dir);

    liverec::ServiceOptions so;
    so.max_steps = opts.max_steps > 0 ? opts.max_steps : liverec::max_steps_from_env();
    if (opts.languages) {
      so.languages = split_commas(opts.languages);
      for (const auto &id : so.languages)
        if (!registry.find(id))
          return fail(LR_UNKNOWN_LANGUAGE, "unknown backend '" + id + "'");
    }
    auto engine = std::make_unique<lr_engine>();
    engine->service = std::make_unique<liverec::ProbeService>(std::move(registry), std::move(so));
    *out = engine.release();
    return LR_OK;
  } catch (...) {
    return from_exception();
  }
}

void lr_engine_destroy(lr_engine *engine) { delete engine; }

lr_status lr_engine_probe(lr_engine *engine, const char *language, const char *source,
                          char **result_json) {
  if (!engine || !language || !source || !result_json)
    return fail(LR_INVALID_ARGUMENT, "NULL argument");
  try {
    auto result = engine->service->submit(language, source);
    *result_json = copy_out(liverec::to_json(result).dump());
    return LR_OK;
  } catch (...) {
    return from_exception();
  }
}

lr_status lr_engine_latest(lr_engine *engine, const char *language, char **result_json) {
  if (!engine || !language || !result_json)
    return fail(LR_INVALID_ARGUMENT, "NULL argument");
  try {
    auto latest = engine->service->latest(language);
    *result_json = copy_out(latest ? liverec::to_json(*latest).dump() : "null");
    return LR_OK;
  } catch (...) {
    return from_exception();
  }
}

lr_status lr_engine_list_backends(lr_engine *engine, char **backends_json) {
  if (!engine || !backends_json)
    return fail(LR_INVALID_ARGUMENT, "NULL argument");
  try {
    liverec::Json out = liverec::Json::array();
    for (const auto &s : engine->service->backend_status())
      out.push_back({{"id", s.id}, {"description", s.description}, {"available", s.available},
                     {"reason", s.reason}});
    *backends_json = copy_out(out.dump());
    return LR_OK;
  } catch (...) {
    return from_exception();
  }
}

lr_status lr_server_start(lr_engine *engine, const char *host, unsigned short port, lr_server **out) {
  if (!engine || !out)
    return fail(LR_INVALID_ARGUMENT, "NULL argument");
  *out = nullptr;
  try {
    auto server = std::make_unique<lr_server>();
    server->http = std::make_unique<liverec::HttpServer>(*engine->service, host ? host : "127.0.0.1", port);
    server->http->start();
    *out = server.release();
    return LR_OK;
  } catch (const liverec::Error &e) {
    return fail(LR_IO, e.what());
  } catch (...) {
    return from_exception();
  }
}

unsigned short lr_server_port(const lr_server *server) { return server ? server->http->port() : 0; }

void lr_server_wait(lr_server *server) {
  if (server)
    server->http->wait();
}

void lr_server_stop(lr_server *server) {
  if (server)
    server->http->stop();
}

void lr_server_destroy(lr_server *server) { delete server; }

lr_status lr_bench_replay(lr_engine *engine, const char *scenario_path, const char *language, char **csv) {
  if (!engine || !scenario_path || !language || !csv)
    return fail(LR_INVALID_ARGUMENT, "NULL argument");
  try {
    const liverec::Backend *b = nullptr;
    if (auto rc = guarded_backend(engine, language, &b); rc != LR_OK)
      return rc;
    auto scenario = liverec::bench::load_scenario(scenario_path);
    *csv = copy_out(liverec::bench::to_csv(liverec::bench::replay(*engine->service, scenario, language)));
    return LR_OK;
  } catch (...) {
    return from_exception();
  }
}

lr_status lr_bench_steps(lr_engine *engine, const char *language, const int *steps, size_t count,
                         int repeat, char **csv) {
  if (!engine || !language || (!steps && count) || !csv)
    return fail(LR_INVALID_ARGUMENT, "NULL argument");
  try {
    const liverec::Backend *b = nullptr;
    if (auto rc = guarded_backend(engine, language, &b); rc != LR_OK)
      return rc;
    std::vector<int> ks(steps, steps + count);
    *csv = copy_out(liverec::bench::to_csv(liverec::bench::step_scaling(*engine->service, language, ks, repeat)));
    return LR_OK;
  } catch (...) {
    return from_exception();
  }
}

lr_status lr_bench_compile(lr_engine *engine, const char *language, const int *locs, size_t count,
                           char **csv) {
  if (!engine || !language || (!locs && count) || !csv)
    return fail(LR_INVALID_ARGUMENT, "NULL argument");
  try {
    const liverec::Backend *b = nullptr;
    if (auto rc = guarded_backend(engine, language, &b); rc != LR_OK)
      return rc;
    std::vector<int> sizes(locs, locs + count);
    *csv = copy_out(liverec::bench::to_csv(liverec::bench::compile_load_scaling(*b, sizes)));
    return LR_OK;
  } catch (...) {
    return from_exception();
  }
}

lr_status lr_bench_latency(lr_engine *engine, const char *language, int n, int pause_ms,
                           int adapter_latency_ms, char **csv) {
  if (!engine || !language || !csv || n < 0 || pause_ms < 0 || adapter_latency_ms < 0)
    return fail(LR_INVALID_ARGUMENT, "NULL or negative argument");
  try {
    const liverec::Backend *b = nullptr;
    if (auto rc = guarded_backend(engine, language, &b); rc != LR_OK)
      return rc;
    auto ctx = engine->service->registry().context();
    if (adapter_latency_ms > 0) {
      if (b->manifest().adapter.empty() || b->manifest().adapter.front() != "${mock_adapter}")
        return fail(LR_INVALID_ARGUMENT, "adapter latency needs a mock backend");
      ctx.extra_adapter_args = {"--latency", std::to_string(adapter_latency_ms)};
    }
    liverec::Backend timed(b->manifest(), ctx);
    *csv = copy_out(liverec::bench::to_csv(liverec::bench::roundtrip_latency(timed, n, pause_ms)));
    return LR_OK;
  } catch (...) {
    return from_exception();
  }
}

} // extern "C"
