import init, { peakDemo, clusterDemo, regressionDemo } from "./pkg/qualeval_wasm.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22"];

function inputs(section) {
  const v = {};
  for (const el of section.querySelectorAll("input, select")) {
    v[el.name] = el.type === "range" || el.type === "number" ? Number(el.value) : el.value;
    const tag = el.parentElement.querySelector("span");
    if (tag && el.type === "range") tag.textContent = el.value;
  }
  return v;
}

function frame(canvas, xs, ys, pad = 30) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  const sx = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (canvas.width - 2 * pad);
  const sy = (y) => canvas.height - pad - ((y - y0) / (y1 - y0 || 1)) * (canvas.height - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, canvas.width - 2 * pad, canvas.height - 2 * pad);
  ctx.fillStyle = "#555";
  ctx.font = "11px sans-serif";
  ctx.fillText(x0.toPrecision(3), pad, canvas.height - pad + 14);
  ctx.fillText(x1.toPrecision(3), canvas.width - pad - 20, canvas.height - pad + 14);
  ctx.fillText(y1.toPrecision(3), 2, pad + 4);
  ctx.fillText(y0.toPrecision(3), 2, canvas.height - pad);
  return { ctx, sx, sy };
}

function line(f, xs, ys, color, width = 1.5) {
  const { ctx, sx, sy } = f;
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(sx(x), sy(ys[i])) : ctx.moveTo(sx(x), sy(ys[i]))));
  ctx.stroke();
  ctx.lineWidth = 1;
}

function dot(f, x, y, color, r = 2) {
  f.ctx.fillStyle = color;
  f.ctx.beginPath();
  f.ctx.arc(f.sx(x), f.sy(y), r, 0, 2 * Math.PI);
  f.ctx.fill();
}

function run(section, body) {
  const out = section.querySelector(".out");
  try {
    out.classList.remove("err");
    out.textContent = body();
  } catch (e) {
    out.classList.add("err");
    out.textContent = String(e);
  }
}

function peak() {
  const s = document.getElementById("peak");
  run(s, () => {
    const v = inputs(s);
    const r = JSON.parse(peakDemo(JSON.stringify({ ...v, amplitude: 1000 })));
    const f = frame(s.querySelector("canvas"), r.time, r.intensity);
    line(f, r.time, r.intensity, "#1f77b4", 1);
    const { left, apex, right } = r.region;
    const t = r.time.slice(left, right + 1);
    line(f, t, r.intensity.slice(left, right + 1), "#d62728", 2);
    dot(f, r.time[apex], r.intensity[apex], "#000", 3);
    const m = r.metrics;
    return `retention time ${m.retention_time.toFixed(4)} min   height ${m.height.toFixed(1)}   ` +
      `SNR ${m.snr.toFixed(1)}   skewness ${m.skewness.toFixed(3)}   area ${m.area.toFixed(1)}`;
  });
}

function cluster() {
  const s = document.getElementById("cluster");
  run(s, () => {
    const v = inputs(s);
    const r = JSON.parse(clusterDemo(JSON.stringify({ ...v, per_blob: 100, k_max: 8 })));
    const px = r.points.map((p) => p[0]);
    const py = r.points.map((p) => p[1]);
    const sc = frame(s.querySelector(".scatter"), px, py, 10);
    r.points.forEach((p, i) => dot(sc, p[0], p[1], COLORS[r.labels[i] % COLORS.length]));
    r.centroids.forEach((c) => dot(sc, c[0], c[1], "#000", 4));

    const el = frame(s.querySelector(".elbow"), r.ks, r.wcss);
    line(el, r.ks, r.wcss, "#333");
    r.ks.forEach((k, i) => dot(el, k, r.wcss[i], k === r.elbow_k ? "#d62728" : "#333", k === r.elbow_k ? 5 : 3));
    el.ctx.fillText("WCSS by k", 40, 20);

    const ks = r.ks.filter((_, i) => r.silhouette[i] !== null);
    const sil = r.silhouette.filter((x) => x !== null);
    const sf = frame(s.querySelector(".sil"), ks, [0, ...sil]);
    line(sf, ks, sil, "#333");
    ks.forEach((k, i) => dot(sf, k, sil[i], k === r.elbow_k ? "#d62728" : "#333", k === r.elbow_k ? 5 : 3));
    sf.ctx.fillText("mean silhouette by k", 40, 20);

    const i = r.ks.indexOf(r.elbow_k);
    const s_k = r.silhouette[i];
    return `elbow k = ${r.elbow_k}` + (s_k === null ? "" : `   mean silhouette ${s_k.toFixed(3)}`);
  });
}

function regress() {
  const s = document.getElementById("regress");
  run(s, () => {
    const v = inputs(s);
    const svr = v.family === "svr";
    s.querySelector(".gb").hidden = svr;
    s.querySelector(".svr").hidden = !svr;
    const model = svr
      ? { family: "svr", C: 10 ** v.logC, gamma: v.gamma, epsilon: 0.05 }
      : { family: "gradient_boost", learning_rate: 0.1, n_estimators: v.n_estimators, max_depth: v.max_depth, max_leaf_nodes: 10 };
    const r = JSON.parse(regressionDemo(JSON.stringify({ n: 150, noise: v.noise, seed: 1, model })));
    const f = frame(s.querySelector("canvas"), r.grid, [...r.y, ...r.prediction]);
    r.x.forEach((x, i) => dot(f, x, r.y[i], "#888"));
    line(f, r.grid, r.grid.map(Math.sin), "#2ca02c", 1);
    line(f, r.grid, r.prediction, "#d62728", 2);
    return `train RMSE ${r.rmse.toFixed(4)}   train R² ${r.r2.toFixed(4)}   (green: sin x, red: fit)`;
  });
}

await init();
for (const [id, f] of [["peak", peak], ["cluster", cluster], ["regress", regress]]) {
  const s = document.getElementById(id);
  s.addEventListener("input", f);
  f();
}
