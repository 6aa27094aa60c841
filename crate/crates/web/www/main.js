import init, { simulatePaths, ensembleVsOracle, energyLedger } from "./pkg/smcf_web.js";

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
const $ = (id) => document.getElementById(id);

function config() {
  return JSON.stringify({
    sites: Number($("sites").value),
    dt: Number($("dt").value),
    t_end: Number($("t_end").value),
    sigma: Number($("sigma").value),
    seed: Number($("seed").value),
    update_mode: $("update_mode").value,
  });
}

function report(fn) {
  return () => {
    $("status").textContent = "";
    try {
      fn();
    } catch (e) {
      $("status").textContent = String(e.message ?? e);
    }
  };
}

// Series: [{xs, ys, color, dots?, width?}]
function plot(canvas, series) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 44;
  ctx.clearRect(0, 0, w, h);

  let [x0, x1, y0, y1] = [Infinity, -Infinity, Infinity, -Infinity];
  for (const s of series) {
    for (let i = 0; i < s.xs.length; i++) {
      x0 = Math.min(x0, s.xs[i]); x1 = Math.max(x1, s.xs[i]);
      y0 = Math.min(y0, s.ys[i]); y1 = Math.max(y1, s.ys[i]);
    }
  }
  if (y1 - y0 < 1e-12) { y0 -= 1; y1 += 1; }
  const margin = 0.05 * (y1 - y0);
  y0 -= margin; y1 += margin;
  const px = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const py = (y) => h - pad + ((y0 - y) / (y1 - y0)) * (h - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.lineWidth = 1;
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.font = "11px system-ui";
  ctx.fillText(y1.toPrecision(3), 2, pad + 4);
  ctx.fillText(y0.toPrecision(3), 2, h - pad);
  ctx.fillText(x0.toPrecision(3), pad, h - pad + 14);
  ctx.fillText(x1.toPrecision(3), w - pad - 20, h - pad + 14);
  ctx.fillText("t", w / 2, h - pad + 28);

  for (const s of series) {
    ctx.strokeStyle = ctx.fillStyle = s.color;
    ctx.lineWidth = s.width ?? 1;
    if (s.dots) {
      for (let i = 0; i < s.xs.length; i += s.dots) {
        ctx.beginPath();
        ctx.arc(px(s.xs[i]), py(s.ys[i]), 2.5, 0, 2 * Math.PI);
        ctx.fill();
      }
    } else {
      ctx.beginPath();
      for (let i = 0; i < s.xs.length; i++) {
        const [x, y] = [px(s.xs[i]), py(s.ys[i])];
        i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y);
      }
      ctx.stroke();
    }
  }
}

function runPaths() {
  const paths = simulatePaths(config(), Number($("n_paths").value));
  const times = paths.times();
  const values = paths.values();
  const { sites, records } = paths;
  const series = [];
  for (let p = 0; p < paths.path_count; p++) {
    for (let i = 0; i < sites; i++) {
      const ys = new Float64Array(records);
      for (let r = 0; r < records; r++) ys[r] = values[(p * records + r) * sites + i];
      series.push({ xs: times, ys, color: PALETTE[p % PALETTE.length] });
    }
  }
  paths.free();
  plot($("paths"), series);
}

function runEnsemble() {
  const v = JSON.parse(ensembleVsOracle(config(), Number($("n_ensemble").value)));
  const every = Math.max(1, Math.floor(v.times.length / 40));
  plot($("ensemble"), [
    { xs: v.times, ys: v.graph_mean_variance_exact, color: "#1f77b4", width: 2 },
    { xs: v.times, ys: v.graph_mean_variance, color: "#1f77b4", dots: every },
    { xs: v.times, ys: v.energy_exact, color: "#d62728", width: 2 },
    { xs: v.times, ys: v.energy_mean, color: "#d62728", dots: every },
  ]);
  const last = v.times.length - 1;
  const rows = v.terminal_variance.map((x, i) => {
    const exact = v.terminal_variance_exact[i];
    return `site ${String(i).padStart(2)}  var ${x.toExponential(4)} ± ${v.terminal_variance_se[i].toExponential(1)}` +
      `  exact ${exact.toExponential(4)}  rel.err ${(Math.abs(x - exact) / exact * 100).toFixed(2)}%`;
  });
  $("ensemble_summary").textContent =
    `${v.path_count} paths, t = ${v.times[last]}\n` +
    `Var(mean position): ${v.graph_mean_variance[last].toExponential(4)} vs exact ${v.graph_mean_variance_exact[last].toExponential(4)}\n` +
    `E[energy]: ${v.energy_mean[last].toExponential(4)} ± ${v.energy_se[last].toExponential(1)} vs exact ${v.energy_exact[last].toExponential(4)}\n` +
    rows.join("\n");
}

function runLedger() {
  const v = JSON.parse(energyLedger(config(), Number($("ledger_path").value)));
  const change = v.f_values.map((f) => f - v.f_values[0]);
  plot($("ledger"), [
    { xs: v.times, ys: change, color: "#000", width: 2 },
    { xs: v.times, ys: v.drift_cum, color: "#2ca02c" },
    { xs: v.times, ys: v.noise_cum, color: "#ff7f0e" },
    { xs: v.times, ys: v.qv_cum, color: "#9467bd" },
    { xs: v.times, ys: v.residual, color: "#888" },
  ]);
}

await init();
$("run_paths").onclick = report(runPaths);
$("run_ensemble").onclick = report(runEnsemble);
$("run_ledger").onclick = report(runLedger);
report(runPaths)();
