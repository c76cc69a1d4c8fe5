#pragma once

// Everything except the HTTP provider adapters (sage/http_provider.hpp),
// which need cpp-httplib and OpenSSL::SSL.

#include <sage/config.hpp>
#include <sage/datasets.hpp>
#include <sage/embedding.hpp>
#include <sage/metrics.hpp>
#include <sage/perturbation.hpp>
#include <sage/report.hpp>
#include <sage/runner.hpp>
#include <sage/subject.hpp>
#include <sage/tasks/clustering.hpp>
#include <sage/tasks/human_preference.hpp>
#include <sage/tasks/retrieval.hpp>
#include <sage/tasks/robustness.hpp>
#include <sage/tasks/sensitivity.hpp>
#include <sage/tokenization.hpp>
