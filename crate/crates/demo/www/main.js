import init, { panel_curves, rotting_discrepancy, concentration } from "./pkg/rested_bandits_demo.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

function num(id) {
  return Number(document.getElementById(id).value);
}

function plot(canvas, series, { xlabel, ylabel }) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = { l: 60, r: 150, t: 10, b: 40 };
  ctx.clearRect(0, 0, w, h);

  const xs = series.flatMap(s => s.x);
  const ys = series.flatMap(s => s.band ? [...s.band.lo, ...s.band.hi] : s.y);
  let [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (x0 === x1) x1 = x0 + 1;
  if (y0 === y1) { y0 -= 0.5; y1 += 0.5; }
  const px = x => pad.l + (x - x0) / (x1 - x0) * (w - pad.l - pad.r);
  const py = y => h - pad.b - (y - y0) / (y1 - y0) * (h - pad.t - pad.b);

  ctx.strokeStyle = "#000";
  ctx.fillStyle = "#000";
  ctx.font = "12px sans-serif";
  ctx.beginPath();
  ctx.moveTo(pad.l, pad.t);
  ctx.lineTo(pad.l, h - pad.b);
  ctx.lineTo(w - pad.r, h - pad.b);
  ctx.stroke();
  for (let i = 0; i <= 4; i++) {
    const y = y0 + (y1 - y0) * i / 4;
    const x = x0 + (x1 - x0) * i / 4;
    ctx.fillText(y.toPrecision(3), 5, py(y) + 4);
    ctx.fillText(x.toPrecision(4), px(x) - 15, h - pad.b + 15);
  }
  ctx.fillText(xlabel, (w - pad.r) / 2, h - 5);
  ctx.fillText(ylabel, pad.l + 5, pad.t + 12);

  series.forEach((s, i) => {
    const c = s.color || COLORS[i % COLORS.length];
    if (s.band) {
      ctx.fillStyle = c + "33";
      ctx.beginPath();
      s.x.forEach((x, j) => ctx.lineTo(px(x), py(s.band.hi[j])));
      for (let j = s.x.length - 1; j >= 0; j--) ctx.lineTo(px(s.x[j]), py(s.band.lo[j]));
      ctx.closePath();
      ctx.fill();
    }
    ctx.strokeStyle = c;
    ctx.setLineDash(s.dashed ? [5, 4] : []);
    ctx.beginPath();
    s.x.forEach((x, j) => (j ? ctx.lineTo(px(x), py(s.y[j])) : ctx.moveTo(px(x), py(s.y[j]))));
    ctx.stroke();
    if (s.points) s.x.forEach((x, j) => ctx.fillRect(px(x) - 2, py(s.y[j]) - 2, 4, 4));
    ctx.setLineDash([]);
    ctx.fillStyle = c;
    ctx.fillText(s.label, w - pad.r + 10, pad.t + 15 + 18 * i);
  });
}

function guarded(msgId, fn) {
  const msg = document.getElementById(msgId);
  msg.className = "";
  msg.textContent = "running...";
  setTimeout(() => {
    try {
      const t0 = performance.now();
      fn();
      msg.textContent = `${((performance.now() - t0) / 1000).toFixed(2)} s`;
    } catch (e) {
      msg.className = "err";
      msg.textContent = e.message || String(e);
    }
  }, 10);
}

function runPanel() {
  guarded("panel-msg", () => {
    const panel = document.getElementById("panel").value;
    const data = JSON.parse(panel_curves(panel, num("arms"), num("horizon"), num("trials"), num("seed")));
    const series = data.curves.map(c => ({
      label: c.label,
      x: data.t,
      y: c.mean,
      band: { lo: c.mean.map((m, j) => m - c.std[j]), hi: c.mean.map((m, j) => m + c.std[j]) },
    }));
    plot(document.getElementById("panel-plot"), series, { xlabel: "round t", ylabel: "reward / round (mean ± sd)" });
  });
}

function runRotting() {
  guarded("rotting-msg", () => {
    const thetas = new Float64Array(
      document.getElementById("thetas").value.split(",").map(s => Number(s.trim())).filter(x => !Number.isNaN(x)),
    );
    const series = JSON.parse(rotting_discrepancy(thetas, num("pulls")));
    plot(document.getElementById("rotting-plot"), series, { xlabel: "pulls k", ylabel: "discrepancy D" });
  });
}

function runConcentration() {
  guarded("conc-msg", () => {
    const series = JSON.parse(concentration(num("c-pulls"), num("c-reps"), num("c-seed")));
    series[0].dashed = true;
    series[0].color = "#888";
    series.forEach(s => (s.points = true));
    plot(document.getElementById("conc-plot"), series, { xlabel: "delta", ylabel: "violation rate" });
  });
}

await init();
document.getElementById("run-panel").onclick = runPanel;
document.getElementById("run-rotting").onclick = runRotting;
document.getElementById("run-conc").onclick = runConcentration;
runRotting();
runConcentration();
