// Command-line front end; talks to the pipeline library exclusively through
// the C interface in declineforge.h.

#include <cstdio>

#include "CLI11.hpp"
#include "declineforge.h"

int main(int argc, char** argv) {
  CLI::App app{
      "declineforge: synthetic cognitive-decline cohort pipeline (trajectory "
      "clustering, volume pretraining, cross-modal evaluation)"};
  app.require_subcommand(1);

  std::string config_path;
  std::string workspace;
  bool force = false;
  long long seed = -1;

  const char* stages[] = {"synth",    "cluster", "split",   "pretrain",
                          "embed",    "evaluate", "run-all", "report"};
  const char* descriptions[] = {
      "generate the synthetic cohort (trajectories, tabular, volumes)",
      "DTW k-means trajectory clustering and elbow analysis",
      "stratified train/test split",
      "reconstruction pretraining of the volume encoder",
      "extract encoder embeddings for every subject",
      "train classifiers and report one-vs-rest AUC tables",
      "run every stage in order, resuming from the manifest",
      "print the evaluation report"};

  std::vector<CLI::App*> subs;
  for (size_t i = 0; i < std::size(stages); ++i) {
    CLI::App* sub = app.add_subcommand(stages[i], descriptions[i]);
    sub->add_option("--config", config_path, "pipeline config (JSON)")
        ->required();
    sub->add_option("--workspace", workspace,
                    "override the config's workspace directory");
    sub->add_flag("--force", force, "overwrite existing stage outputs");
    sub->add_option("--seed", seed, "override the cohort seed (>= 0)");
    subs.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);

  std::string stage;
  for (size_t i = 0; i < std::size(stages); ++i)
    if (subs[i]->parsed()) stage = stages[i];

  df_status status;
  if (stage == "report") {
    char* text = nullptr;
    status = df_report(config_path.c_str(),
                       workspace.empty() ? nullptr : workspace.c_str(), &text);
    if (status == DF_OK) {
      std::fputs(text, stdout);
      df_string_free(text);
    }
  } else {
    status = df_run_stage(config_path.c_str(), stage.c_str(), force ? 1 : 0,
                          workspace.empty() ? nullptr : workspace.c_str(),
                          seed);
  }
  if (status != DF_OK)
    std::fprintf(stderr, "declineforge %s: %s\n", stage.c_str(),
                 df_last_error());
  return static_cast<int>(status);
}
