// Minimal end-to-end walkthrough on synthetic data: build a few
// constant-turn scenes, train briefly, compare against the linear baseline
// and render one trajectory overlay.

#include <iostream>

#include "trajpred/trajpred.hpp"

using namespace trajpred;

namespace {

Scene make_arc_scene(Rng& rng, long long id) {
    Scene s;
    s.dataset = "demo";
    s.agent_id = id;
    s.units = Units::meters;
    Vec2 p{rng.uniform(-10, 10), rng.uniform(-10, 10)};
    double theta = rng.uniform(0, 2 * M_PI);
    const double step = rng.uniform(0.4, 0.6);
    const double turn = rng.uniform(0.1, 0.2) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    for (std::size_t k = 0; k < 20; ++k) {
        TrackPoint tp;
        tp.frame = static_cast<long long>(k);
        tp.t = static_cast<double>(k) * kTimeStep;
        tp.pos = p;
        (k < 8 ? s.observed : s.future).push_back(tp);
        p = p + Vec2{std::cos(theta) * step, std::sin(theta) * step};
        theta += turn;
    }
    return s;
}

} // namespace

int main() {
    Rng scene_rng(7);
    std::vector<Scene> train_scenes, test_scenes;
    for (long long i = 0; i < 48; ++i) train_scenes.push_back(make_arc_scene(scene_rng, i));
    for (long long i = 48; i < 60; ++i) test_scenes.push_back(make_arc_scene(scene_rng, i));

    Model<float> model{ModelConfig{}};
    Rng init_rng(1);
    model.init(init_rng);

    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.batch_size = 16;
    cfg.lr0 = 1e-3;
    cfg.lr_decay_every = 20;
    cfg.lr_decay = 0.5;
    cfg.seed = 2;
    cfg.val_fraction = 0.0;
    std::cout << "training on " << train_scenes.size() << " synthetic arc scenes...\n";
    train(model, train_scenes, cfg, "demo_out");

    auto model_metrics = evaluate_model(model, test_scenes, "test");
    auto baseline_metrics = evaluate_baseline(test_scenes, "test");
    std::cout << "model    ADE/FDE: " << model_metrics.mean.ade << " / "
              << model_metrics.mean.fde << "\n";
    std::cout << "baseline ADE/FDE: " << baseline_metrics.mean.ade << " / "
              << baseline_metrics.mean.fde << "\n";

    Graph<float> g;
    auto pred = extract_prediction(model.forward(g, test_scenes[0], DecodeMode::inference));
    plot_scene_overlay(test_scenes[0], pred.world_trajectory())
        .save_png("demo_out/overlay.png");
    std::cout << "overlay written to demo_out/overlay.png\n";
    return 0;
}
