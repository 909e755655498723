// Demo page logic: plain canvas charts over the wasm exports.
// Build the pkg/ directory first (see README: wasm-bindgen --target web).

import init, { emrt_path_json, mu_sweep_json, rl_demo_json } from "./pkg/statarb_wasm.js";

const $ = (id) => document.getElementById(id);

// ---- tiny chart helper -----------------------------------------------------

function chart(canvas, { lines = [], points = [], hlines = [], xLabel = "", yLabel = "" }) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height;
  const pad = { l: 52, r: 12, t: 10, b: 26 };
  ctx.clearRect(0, 0, W, H);

  let xMax = 1, yMin = Infinity, yMax = -Infinity;
  for (const line of lines) {
    xMax = Math.max(xMax, line.xs ? Math.max(...line.xs) : line.ys.length - 1);
    for (const y of line.ys) { yMin = Math.min(yMin, y); yMax = Math.max(yMax, y); }
  }
  for (const h of hlines) { yMin = Math.min(yMin, h.y); yMax = Math.max(yMax, h.y); }
  if (!isFinite(yMin)) { yMin = 0; yMax = 1; }
  const ySpan = (yMax - yMin) || 1;
  yMin -= 0.06 * ySpan; yMax += 0.06 * ySpan;
  let xMin = Infinity;
  for (const line of lines) xMin = Math.min(xMin, line.xs ? Math.min(...line.xs) : 0);
  if (!isFinite(xMin)) xMin = 0;

  const X = (x) => pad.l + (x - xMin) / (xMax - xMin || 1) * (W - pad.l - pad.r);
  const Y = (y) => H - pad.b - (y - yMin) / (yMax - yMin) * (H - pad.t - pad.b);

  // axes + ticks
  ctx.strokeStyle = "#d4d8e3"; ctx.fillStyle = "#67718a";
  ctx.font = "11px system-ui"; ctx.lineWidth = 1;
  ctx.strokeRect(pad.l, pad.t, W - pad.l - pad.r, H - pad.t - pad.b);
  for (let i = 0; i <= 4; i++) {
    const y = yMin + (i / 4) * (yMax - yMin);
    ctx.fillText(y.toPrecision(4), 6, Y(y) + 4);
    const x = xMin + (i / 4) * (xMax - xMin);
    ctx.fillText(x.toPrecision(3), X(x) - 8, H - 8);
  }
  if (yLabel) ctx.fillText(yLabel, 6, pad.t + 10);
  if (xLabel) ctx.fillText(xLabel, W - pad.r - 60, H - 8);

  for (const h of hlines) {
    ctx.strokeStyle = h.color || "#94a3b8";
    ctx.setLineDash([5, 4]);
    ctx.beginPath(); ctx.moveTo(pad.l, Y(h.y)); ctx.lineTo(W - pad.r, Y(h.y)); ctx.stroke();
    ctx.setLineDash([]);
  }

  for (const line of lines) {
    ctx.strokeStyle = line.color || "#2563eb";
    ctx.lineWidth = line.width || 1.4;
    ctx.beginPath();
    line.ys.forEach((y, i) => {
      const x = line.xs ? line.xs[i] : i;
      if (i === 0) ctx.moveTo(X(x), Y(y)); else ctx.lineTo(X(x), Y(y));
    });
    ctx.stroke();
  }

  for (const p of points) {
    ctx.fillStyle = p.color;
    ctx.beginPath();
    ctx.arc(X(p.x), Y(p.y), p.r || 3.4, 0, Math.PI * 2);
    ctx.fill();
  }
}

const fail = (el, payload) => { el.innerHTML = `<span class="error">${payload.error}</span>`; };

// ---- section 1: path explorer ----------------------------------------------

function drawPath() {
  const mu = +$("path-mu").value, sigma = +$("path-sigma").value, c = +$("path-c").value;
  $("path-mu-val").textContent = mu; $("path-sigma-val").textContent = sigma; $("path-c-val").textContent = c;
  const payload = JSON.parse(emrt_path_json(mu, 0.0, sigma, c, 1000, +$("path-seed").value));
  const out = $("path-readout");
  if (payload.error) return fail(out, payload);

  const points = [];
  for (const e of payload.extremes) {
    points.push({ x: e.index, y: e.value, color: e.kind === "min" ? "#16a34a" : "#dc2626" });
  }
  for (const t of payload.taus) {
    if (t.kind === "crossing") points.push({ x: t.index, y: t.value, color: "#f59e0b", r: 2.6 });
  }
  chart($("path-canvas"), {
    lines: [{ ys: payload.series, color: "#334155", width: 1.1 }],
    points,
    hlines: [{ y: payload.reference_mean }],
    xLabel: "step", yLabel: "X",
  });
  const pairs = Math.floor(payload.taus.length / 2);
  out.innerHTML = payload.emrt == null
    ? "No complete extreme-to-crossing pair at this threshold."
    : `EMRT <b>${payload.emrt.toFixed(2)}</b> steps over <b>${pairs}</b> pairs · ` +
      `${payload.extremes.length} important extremes · sample mean ${payload.reference_mean.toFixed(3)}`;
}

// ---- section 2: mu sweep -----------------------------------------------------

function drawSweep() {
  const c = +$("sweep-c").value;
  $("sweep-c-val").textContent = c;
  const btn = $("sweep-run"); btn.disabled = true;
  setTimeout(() => {
    const payload = JSON.parse(mu_sweep_json(2.0, 20.0, 2.0, +$("sweep-paths").value, c, 1000, +$("sweep-seed").value));
    btn.disabled = false;
    const out = $("sweep-readout");
    if (payload.error) return fail(out, payload);
    chart($("sweep-canvas"), {
      lines: [{ xs: payload.map(r => r.mu), ys: payload.map(r => r.mean_emrt), color: "#2563eb", width: 1.8 }],
      points: payload.map(r => ({ x: r.mu, y: r.mean_emrt, color: "#2563eb" })),
      xLabel: "μ", yLabel: "mean EMRT (steps)",
    });
    const first = payload[0], last = payload[payload.length - 1];
    out.innerHTML = `mean EMRT falls from <b>${first.mean_emrt.toFixed(2)}</b> steps at μ=${first.mu} ` +
      `to <b>${last.mean_emrt.toFixed(2)}</b> at μ=${last.mu}`;
  }, 20);
}

// ---- section 3: RL trading ---------------------------------------------------

function runRl() {
  const btn = $("rl-run"); btn.disabled = true;
  $("rl-readout").textContent = "training…";
  setTimeout(() => {
    const payload = JSON.parse(rl_demo_json(+$("rl-paths").value, +$("rl-episodes").value, +$("rl-seed").value));
    btn.disabled = false;
    const out = $("rl-readout");
    if (payload.error) return fail(out, payload);

    chart($("rl-spread-canvas"), {
      lines: [{ ys: payload.spread, color: "#334155", width: 1.1 }],
      points: payload.trades.map(t => ({ x: t.index, y: t.value, color: t.action > 0 ? "#16a34a" : "#dc2626", r: 3.8 })),
      hlines: [{ y: payload.theta }],
      xLabel: "day", yLabel: "spread",
    });
    chart($("rl-wealth-canvas"), {
      lines: [
        { ys: payload.baseline_wealth, color: "#9ca3af", width: 1.2 },
        { ys: payload.wealth, color: "#2563eb", width: 1.8 },
      ],
      xLabel: "day", yLabel: "wealth ($)",
    });
    const m = payload.metrics;
    out.innerHTML =
      `agent CumulPnL <b>${m.cumul_pnl_pct.toFixed(1)}%</b> · daily Sharpe <b>${m.daily_sharpe.toFixed(3)}</b> · ` +
      `MaxDD <b>${m.max_drawdown_pct.toFixed(2)}%</b> · ${payload.trades.length} trades — ` +
      `random baseline CumulPnL ${payload.baseline_cumul_pnl_pct.toFixed(1)}%`;
  }, 20);
}

// ---- boot --------------------------------------------------------------------

init().then(() => {
  $("boot").remove();
  for (const id of ["path-mu", "path-sigma", "path-c"]) $(id).addEventListener("input", drawPath);
  $("path-run").addEventListener("click", drawPath);
  $("sweep-run").addEventListener("click", drawSweep);
  $("rl-run").addEventListener("click", runRl);
  drawPath();
  drawSweep();
}).catch((e) => { $("boot").innerHTML = `<span class="error">wasm failed to load: ${e}</span>`; });
