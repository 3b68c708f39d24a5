#include "panseg/model/train.hpp"

#include <cmath>

#include "panseg/core/parallel.hpp"
#include "panseg/core/rng.hpp"
#include "panseg/kernels/kernels.hpp"

namespace panseg::model {

namespace {

void accumulate(ModelParams& into, const ModelParams& g, float alpha) {
    auto add = [&](std::vector<float>& a, const std::vector<float>& b) {
        kernels::axpy(alpha, b.data(), a.data(), a.size());
    };
    add(into.conv1.w, g.conv1.w);
    add(into.conv1.b, g.conv1.b);
    add(into.conv2.w, g.conv2.w);
    add(into.conv2.b, g.conv2.b);
    add(into.sem_head.w, g.sem_head.w);
    add(into.sem_head.b, g.sem_head.b);
    add(into.inst_head.w, g.inst_head.w);
    add(into.inst_head.b, g.inst_head.b);
}

} // namespace

TrainResult train(const TrainConfig& cfg, const std::vector<augment::Sample>& train_set,
                  const ValidateFn& validate) {
    require(!train_set.empty(), Errc::invalid_argument, "training set is empty");
    require(cfg.steps >= 1 && cfg.batch_size >= 1, Errc::invalid_argument,
            "steps and batch_size must be >= 1");

    const int n_images = static_cast<int>(train_set.size());
    const int epoch_size = cfg.epoch_size > 0 ? cfg.epoch_size : n_images;

    // Image draw distribution: Eq. importance sampling, or uniform when ablated.
    std::vector<SemanticMap> sems;
    sems.reserve(train_set.size());
    for (const auto& s : train_set) sems.push_back(s.sem);
    sampler::ClassOccupancy occ = sampler::occupancy(sems, cfg.num_classes);
    std::vector<double> dist;
    if (cfg.importance_sampling) {
        dist = sampler::sampling_distribution(occ);
    } else {
        dist.assign(train_set.size(), 1.0 / n_images);
    }

    // EMA prior starts at the dataset-mean occupancy.
    std::vector<float> prior0(static_cast<std::size_t>(cfg.num_classes), 0.0f);
    for (int c = 0; c < cfg.num_classes; ++c) {
        double acc = 0.0;
        for (int n = 0; n < n_images; ++n) acc += occ.at(n, c);
        prior0[c] = static_cast<float>(acc / n_images);
    }
    loss::ClassPrior prior = loss::make_prior(prior0, cfg.ema_decay);

    ModelParams params =
        init_model(cfg.num_classes, cfg.trunk_channels, cfg.dropout, mix_seed(cfg.seed, 0x10d));
    AdamWState opt = make_optimizer(params);

    TrainResult result;
    result.best_params = params;
    result.final_params = params;

    std::vector<int> epoch_indices;
    std::size_t epoch_pos = 0;
    std::int64_t epoch_counter = 0;

    const float inv_b = 1.0f / static_cast<float>(cfg.batch_size);
    std::vector<ModelParams> sample_grads(static_cast<std::size_t>(cfg.batch_size),
                                          zeros_like(params));
    std::vector<LossBreakdown> sample_losses(static_cast<std::size_t>(cfg.batch_size));
    std::vector<augment::Sample> batch(static_cast<std::size_t>(cfg.batch_size));

    for (std::int64_t step = 0; step < cfg.steps; ++step) {
        // refill the epoch subset as needed (with-replacement draw)
        for (int b = 0; b < cfg.batch_size; ++b) {
            if (epoch_pos >= epoch_indices.size()) {
                epoch_indices = sampler::draw_epoch(dist, epoch_size,
                                                    mix_seed(cfg.seed, 0xe0 + epoch_counter));
                ++epoch_counter;
                epoch_pos = 0;
            }
            int idx = epoch_indices[epoch_pos++];
            batch[b] = augment::augment_train(train_set[idx], cfg.aug,
                                              mix_seed(cfg.seed, step * 131 + b));
        }

        // per-step EMA update from the batch occupancy, then weights
        if (cfg.loss_weighting) {
            std::vector<float> batch_occ(static_cast<std::size_t>(cfg.num_classes), 0.0f);
            for (const auto& s : batch) {
                std::vector<float> o = loss::occupancy_counts(s.sem, cfg.num_classes);
                for (int c = 0; c < cfg.num_classes; ++c) batch_occ[c] += o[c] * inv_b;
            }
            prior = loss::ema_update(prior, batch_occ);
        }
        loss::LossWeights weights = cfg.loss_weighting
                                        ? loss::class_weights(prior, cfg.rho)
                                        : loss::uniform_weights(cfg.num_classes, cfg.smoothing);
        weights.smoothing = cfg.smoothing;

        parallel_for(static_cast<std::size_t>(cfg.batch_size), cfg.threads, [&](std::size_t b) {
            sample_grads[b] = zeros_like(params);
            const augment::Sample& s = batch[b];
            targets::ThreeLabelTarget tri = targets::encode_three_label(
                s.inst, cfg.boundary_width, cfg.boundary_from_other_instances);
            targets::CenterVectorField vec = targets::encode_center_vectors(s.inst);
            std::vector<std::uint8_t> fg = targets::foreground_mask(s.inst);
            sample_losses[b] = backward(params, s.image, s.sem, tri, vec, fg, weights,
                                        RunMode::train, mix_seed(cfg.seed, 0x5eed + step * 17 + b),
                                        cfg.instance_loss_weight, sample_grads[b]);
        });

        LossBreakdown mean_loss;
        ModelParams grads = zeros_like(params);
        for (int b = 0; b < cfg.batch_size; ++b) {
            accumulate(grads, sample_grads[b], inv_b);
            mean_loss.total += sample_losses[b].total * inv_b;
            mean_loss.sem_ce += sample_losses[b].sem_ce * inv_b;
            mean_loss.tri_ce += sample_losses[b].tri_ce * inv_b;
            mean_loss.vec_l2 += sample_losses[b].vec_l2 * inv_b;
        }
        if (!std::isfinite(mean_loss.total))
            fail(Errc::divergence, "training diverged (non-finite loss) at step " +
                                       std::to_string(step));

        double lr = cosine_lr(step, cfg.steps, cfg.lr_base, cfg.lr_min);
        adamw_update(params, grads, opt, static_cast<float>(lr), cfg.beta1, cfg.beta2,
                     cfg.adam_eps, cfg.weight_decay);

        TrainLogRow row;
        row.step = step;
        row.lr = lr;
        row.total = mean_loss.total;
        row.sem_ce = mean_loss.sem_ce;
        row.tri_ce = mean_loss.tri_ce;
        row.vec_l2 = mean_loss.vec_l2;

        bool last_step = step + 1 == cfg.steps;
        if (validate && (last_step || (cfg.val_interval > 0 &&
                                       (step + 1) % cfg.val_interval == 0))) {
            double score = validate(params);
            row.val_mpq = score;
            if (score > result.best_val) {
                result.best_val = score;
                result.best_step = step;
                result.best_params = params;
            }
        }
        result.log.push_back(row);
    }

    result.final_params = params;
    if (!validate || result.best_step < 0) {
        result.best_params = params;
        result.best_step = cfg.steps - 1;
    }
    return result;
}

} // namespace panseg::model
