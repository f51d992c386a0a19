import init, { gamma_max_2x2, presets_2x2, alpha_sweep } from "./pkg/pldadapt_demo.js";

const COLORS = {
  y: "#1f77b4", z: "#2ca02c", gamma: "#d62728",
  ood: "#1f77b4", ind: "#2ca02c", pseudo: "#9467bd",
  coral_plus: "#8c564b", lip: "#ff7f0e", lip_reg: "#d62728",
  cip: "#17becf", cip_reg: "#e377c2", case7: "#7f7f7f", case8: "#bcbd22",
};

function slider(parent, label, min, max, step, value, onInput) {
  const row = document.createElement("label");
  row.textContent = label;
  const input = Object.assign(document.createElement("input"), { type: "range", min, max, step, value });
  const out = document.createElement("output");
  out.value = value;
  input.addEventListener("input", () => { out.value = input.value; onInput(); });
  row.append(input, out);
  parent.append(row);
  return () => parseFloat(input.value);
}

function legend(el, names) {
  el.innerHTML = names
    .map((n) => `<span><i class="swatch" style="background:${COLORS[n]}"></i>${n}</span>`)
    .join("");
}

function call(fn, ...args) {
  const v = JSON.parse(fn(...args));
  if (v.error) throw new Error(v.error);
  return v;
}

function drawEllipses(canvas, shapes) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  let extent = 0;
  for (const { shape } of shapes) for (const [x, y] of shape.points) extent = Math.max(extent, Math.abs(x), Math.abs(y));
  const scale = (0.45 * Math.min(w, h)) / (extent || 1);
  ctx.strokeStyle = "#eee";
  ctx.beginPath();
  ctx.moveTo(w / 2, 0); ctx.lineTo(w / 2, h);
  ctx.moveTo(0, h / 2); ctx.lineTo(w, h / 2);
  ctx.stroke();
  for (const { name, shape, width = 2, dash = [] } of shapes) {
    ctx.strokeStyle = COLORS[name];
    ctx.lineWidth = width;
    ctx.setLineDash(dash);
    ctx.beginPath();
    shape.points.forEach(([x, y], i) => {
      const px = w / 2 + x * scale, py = h / 2 - y * scale;
      if (i === 0) ctx.moveTo(px, py); else ctx.lineTo(px, py);
    });
    ctx.stroke();
  }
  ctx.setLineDash([]);
}

function covControls(parent, prefix, init, redraw) {
  const [xx, xy, yy] = init;
  const gxx = slider(parent, `${prefix} var x`, 0.1, 6, 0.05, xx, redraw);
  const gyy = slider(parent, `${prefix} var y`, 0.1, 6, 0.05, yy, redraw);
  const gr = slider(parent, `${prefix} corr`, -0.95, 0.95, 0.01, xy, redraw);
  return () => {
    const a = gxx(), b = gyy();
    return [a, gr() * Math.sqrt(a * b), b];
  };
}

function setupGamma() {
  const box = document.getElementById("gamma-controls");
  const info = document.getElementById("gamma-info");
  const redraw = () => {
    try {
      const v = call(gamma_max_2x2, new Float64Array(y()), new Float64Array(z()));
      drawEllipses(document.getElementById("gamma-canvas"), [
        { name: "y", shape: v.y },
        { name: "z", shape: v.z },
        { name: "gamma", shape: v.gamma, width: 3, dash: [6, 4] },
      ]);
      const ev = v.gamma.eigenvalues.map((e) => e.toFixed(3)).join(", ");
      info.textContent = `eigenvalues of the result: ${ev}`;
      info.className = "";
    } catch (e) {
      info.textContent = e.message;
      info.className = "error";
    }
  };
  const y = covControls(box, "Y", [4, 0.3, 0.6], redraw);
  const z = covControls(box, "Z", [1, -0.2, 2.5], redraw);
  legend(document.getElementById("gamma-legend"), ["y", "z", "gamma"]);
  redraw();
}

function setupPresets() {
  const box = document.getElementById("preset-controls");
  const shown = ["ood", "ind", "pseudo", "lip", "lip_reg", "cip", "cip_reg"];
  const redraw = () => {
    try {
      const v = call(
        presets_2x2,
        new Float64Array(ood()), new Float64Array(ind()),
        new Float64Array(cOod()), new Float64Array(cInd()), alpha(),
      );
      drawEllipses(document.getElementById("preset-canvas"), [
        { name: "ood", shape: v.ood, width: 1 },
        { name: "ind", shape: v.ind, width: 1 },
        { name: "pseudo", shape: v.pseudo, width: 1, dash: [3, 3] },
        ...["lip", "lip_reg", "cip", "cip_reg"].map((n) => ({ name: n, shape: v.adapted[n] })),
      ]);
    } catch (e) {
      document.getElementById("preset-legend").textContent = e.message;
    }
  };
  const ood = covControls(box, "OOD", [3, 0.5, 1], redraw);
  const ind = covControls(box, "InD", [0.8, -0.3, 1.6], redraw);
  const cOod = covControls(box, "C_OOD", [4, 0.4, 2], redraw);
  const cInd = covControls(box, "C_InD", [1.5, -0.2, 3], redraw);
  const alpha = slider(box, "alpha", 0, 1, 0.05, 0.5, redraw);
  legend(document.getElementById("preset-legend"), shown);
  redraw();
}

function drawCurves(canvas, v, metric) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 40;
  ctx.clearRect(0, 0, w, h);
  const names = Object.keys(v.curves);
  const ys = names.flatMap((n) => v.curves[n].map((p) => p[metric]));
  const lo = Math.min(...ys), hi = Math.max(...ys);
  const sx = (a) => pad + a * (w - 2 * pad);
  const sy = (m) => h - pad - ((m - lo) / (hi - lo || 1)) * (h - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.fillText("alpha", w / 2 - 12, h - 10);
  ctx.fillText(hi.toFixed(3), 2, pad + 4);
  ctx.fillText(lo.toFixed(3), 2, h - pad);
  ctx.fillText(metric, pad, pad - 10);
  for (const n of names) {
    ctx.strokeStyle = COLORS[n];
    ctx.lineWidth = 2;
    ctx.beginPath();
    v.curves[n].forEach((p, i) => (i ? ctx.lineTo(sx(p.alpha), sy(p[metric])) : ctx.moveTo(sx(p.alpha), sy(p[metric]))));
    ctx.stroke();
  }
}

function setupSweep() {
  const box = document.getElementById("sweep-controls");
  const seed = slider(box, "seed", 1, 50, 1, 1, () => {});
  const lo = slider(box, "shift min", 0.1, 1, 0.05, 0.5, () => {});
  const hi = slider(box, "shift max", 1, 4, 0.05, 2, () => {});
  const steps = slider(box, "grid steps", 2, 20, 1, 10, () => {});
  const info = document.getElementById("sweep-info");
  const run = () => {
    info.textContent = "running...";
    setTimeout(() => {
      try {
        const t0 = performance.now();
        const v = call(alpha_sweep, seed(), lo(), Math.max(hi(), lo()), steps());
        drawCurves(document.getElementById("sweep-canvas"), v, "min_cprimary");
        const spread = Object.entries(v.curves).map(([n, c]) => {
          const m = c.map((p) => p.min_cprimary);
          return `${n} ${(Math.max(...m) - Math.min(...m)).toFixed(3)}`;
        });
        info.textContent = `${v.trials} trials, ${(performance.now() - t0).toFixed(0)} ms. spread: ${spread.join(", ")}`;
        info.className = "";
      } catch (e) {
        info.textContent = e.message;
        info.className = "error";
      }
    }, 10);
  };
  document.getElementById("sweep-run").addEventListener("click", run);
  legend(document.getElementById("sweep-legend"), ["lip", "lip_reg", "cip", "cip_reg"]);
  run();
}

init().then(() => {
  document.getElementById("status").textContent = "";
  setupGamma();
  setupPresets();
  setupSweep();
}).catch((e) => {
  const s = document.getElementById("status");
  s.textContent = `failed to load: ${e.message}`;
  s.className = "error";
});
