/** DOM wiring: canvas stack, class palette, keyboard shortcuts, magnifier. */

import { SessionApi } from "./api.js";
import { drawProposalMarker, renderOverlay } from "./overlay.js";
import { Palette } from "./palette.js";
import { UiSession } from "./session.js";

const MAGNIFIER_SCALE = 8;
const MAGNIFIER_SIZE = 160;

interface Elements {
  image: HTMLCanvasElement;
  overlay: HTMLCanvasElement;
  magnifier: HTMLCanvasElement;
  palette: HTMLElement;
  status: HTMLElement;
  guidance: HTMLElement;
  downloadLink: HTMLAnchorElement;
}

function grabElements(): Elements {
  const byId = <T extends HTMLElement>(id: string): T => {
    const el = document.getElementById(id);
    if (!el) throw new Error(`missing #${id}`);
    return el as T;
  };
  return {
    image: byId<HTMLCanvasElement>("image-layer"),
    overlay: byId<HTMLCanvasElement>("overlay-layer"),
    magnifier: byId<HTMLCanvasElement>("magnifier"),
    palette: byId("palette"),
    status: byId("status"),
    guidance: byId("guidance"),
    downloadLink: byId<HTMLAnchorElement>("download-mask"),
  };
}

export class AnnotationApp {
  private session: UiSession | null = null;
  private selectedClass = 0;
  private palette = new Palette();

  constructor(
    private readonly api: SessionApi,
    private readonly els: Elements,
  ) {}

  async start(imageId: string, budget: number, initialPoints: number,
              evaluation: boolean): Promise<void> {
    try {
      this.palette = new Palette(await this.api.getLegend());
    } catch {
      this.palette = new Palette(); // fallback colors
    }
    this.session = await UiSession.start(
      this.api, imageId, { budget, initial_points: initialPoints }, evaluation,
    );
    sessionStorage.setItem("pointprop-session", this.session.id);
    await this.loadImage();
    this.buildPalette();
    this.bind();
    this.repaint();
  }

  /** Reload path: rebuild everything from the stored session id. */
  async resume(sessionId: string): Promise<void> {
    try {
      this.palette = new Palette(await this.api.getLegend());
    } catch {
      this.palette = new Palette();
    }
    this.session = await UiSession.restore(this.api, sessionId);
    await this.loadImage();
    this.buildPalette();
    this.bind();
    this.repaint();
  }

  private async loadImage(): Promise<void> {
    const session = this.session!;
    const { image, overlay } = this.els;
    image.width = overlay.width = session.width;
    image.height = overlay.height = session.height;
    const url = await this.api.getImagePngUrl(session.id);
    const bitmap = new Image();
    await new Promise<void>((resolve) => {
      bitmap.onload = () => resolve();
      bitmap.onerror = () => resolve(); // sessions without a server image
      bitmap.src = url;
    });
    const ctx = image.getContext("2d")!;
    ctx.fillStyle = "#202020";
    ctx.fillRect(0, 0, image.width, image.height);
    if (bitmap.complete && bitmap.naturalWidth > 0) {
      ctx.drawImage(bitmap, 0, 0);
    }
  }

  private buildPalette(): void {
    const container = this.els.palette;
    container.textContent = "";
    const entries = this.palette.entries();
    entries.forEach((entry, index) => {
      const button = document.createElement("button");
      button.className = "palette-entry";
      button.dataset.classId = String(entry.id);
      const hot = index < 9 ? ` [${index + 1}]` : "";
      button.textContent = `${entry.name}${hot}`;
      button.style.borderColor =
        `rgb(${entry.color.r}, ${entry.color.g}, ${entry.color.b})`;
      button.addEventListener("click", () => this.selectClass(entry.id));
      container.appendChild(button);
    });
    this.selectClass(entries.length ? entries[0].id : 0);
  }

  private selectClass(classId: number): void {
    this.selectedClass = classId;
    for (const el of this.els.palette.querySelectorAll(".palette-entry")) {
      el.classList.toggle(
        "selected", (el as HTMLElement).dataset.classId === String(classId),
      );
    }
  }

  private bind(): void {
    this.els.overlay.addEventListener("click", (event) => {
      void this.onCanvasClick(event);
    });
    this.els.overlay.addEventListener("mousemove", (event) => {
      this.drawMagnifier(...this.canvasCoords(event));
    });
    document.addEventListener("keydown", (event) => {
      const slot = Number(event.key);
      const entries = this.palette.entries();
      if (slot >= 1 && slot <= Math.min(9, entries.length)) {
        this.selectClass(entries[slot - 1].id);
      }
    });
  }

  private canvasCoords(event: MouseEvent): [number, number] {
    const rect = this.els.overlay.getBoundingClientRect();
    const x = Math.floor(
      ((event.clientX - rect.left) / rect.width) * this.els.overlay.width,
    );
    const y = Math.floor(
      ((event.clientY - rect.top) / rect.height) * this.els.overlay.height,
    );
    // Canvas-constrained: clicks cannot produce out-of-bounds pixels.
    return [
      Math.min(Math.max(x, 0), this.els.overlay.width - 1),
      Math.min(Math.max(y, 0), this.els.overlay.height - 1),
    ];
  }

  private async onCanvasClick(event: MouseEvent): Promise<void> {
    const session = this.session;
    if (!session) return;
    try {
      if (session.phase === "seeding") {
        const [x, y] = this.canvasCoords(event);
        await session.submitSeed(x, y, this.selectedClass);
      } else if (session.phase === "proposing" && session.proposal) {
        await session.labelProposal(this.selectedClass);
      }
      await session.refreshMask();
    } catch (error) {
      this.els.status.textContent = String(error);
      return;
    }
    this.repaint();
  }

  private repaint(): void {
    const session = this.session;
    if (!session) return;
    const { overlay, status, guidance, downloadLink } = this.els;
    const ctx = overlay.getContext("2d")!;
    ctx.clearRect(0, 0, overlay.width, overlay.height);
    let rgba: Uint8ClampedArray<ArrayBuffer> | null = null;
    if (session.maskIds) {
      rgba = renderOverlay(
        session.maskIds, session.width, session.height, this.palette,
      );
    }
    if (session.phase === "proposing" && session.proposal) {
      rgba = rgba ?? new Uint8ClampedArray(
        new ArrayBuffer(session.width * session.height * 4),
      );
      drawProposalMarker(
        rgba, session.width, session.height,
        session.proposal.x, session.proposal.y,
      );
    }
    if (rgba) {
      ctx.putImageData(new ImageData(rgba, session.width, session.height), 0, 0);
    }
    status.textContent = `phase: ${session.phase} — labels ${session.progress}`;
    guidance.textContent =
      session.phase === "seeding"
        ? `Click up to ${session.seedCount} points centrally inside the ` +
          "largest regions, choosing a class per click."
        : session.phase === "proposing"
          ? "Pick the class for the marked pixel (keys 1-9 select)."
          : "Session complete — download the augmented mask below.";
    if (session.phase === "complete") {
      downloadLink.href = `${this.api.baseUrl}/sessions/${session.id}/mask`;
      downloadLink.style.display = "inline";
    }
    if (session.proposal) {
      this.drawMagnifier(session.proposal.x, session.proposal.y);
    }
  }

  /** Crosshair magnifier around (x, y) for pixel-level inspection. */
  private drawMagnifier(x: number, y: number): void {
    const { image, overlay, magnifier } = this.els;
    magnifier.width = magnifier.height = MAGNIFIER_SIZE;
    const ctx = magnifier.getContext("2d")!;
    ctx.imageSmoothingEnabled = false;
    const span = MAGNIFIER_SIZE / MAGNIFIER_SCALE;
    const sx = Math.min(Math.max(x - span / 2, 0), image.width - span);
    const sy = Math.min(Math.max(y - span / 2, 0), image.height - span);
    ctx.drawImage(image, sx, sy, span, span, 0, 0, MAGNIFIER_SIZE, MAGNIFIER_SIZE);
    ctx.drawImage(overlay, sx, sy, span, span, 0, 0, MAGNIFIER_SIZE, MAGNIFIER_SIZE);
    ctx.strokeStyle = "#ffffff";
    ctx.beginPath();
    ctx.moveTo(MAGNIFIER_SIZE / 2, 0);
    ctx.lineTo(MAGNIFIER_SIZE / 2, MAGNIFIER_SIZE);
    ctx.moveTo(0, MAGNIFIER_SIZE / 2);
    ctx.lineTo(MAGNIFIER_SIZE, MAGNIFIER_SIZE / 2);
    ctx.stroke();
  }
}

export async function boot(): Promise<void> {
  const els = grabElements();
  const params = new URLSearchParams(window.location.search);
  const api = new SessionApi(params.get("service") ?? "");
  const app = new AnnotationApp(api, els);
  const stored = sessionStorage.getItem("pointprop-session");
  if (stored && params.get("resume") !== "no") {
    try {
      await app.resume(stored);
      return;
    } catch {
      sessionStorage.removeItem("pointprop-session");
    }
  }
  await app.start(
    params.get("image") ?? "scene_0000",
    Number(params.get("budget") ?? 12),
    Number(params.get("initial") ?? 10),
    params.get("evaluation") === "yes",
  );
}

if (typeof document !== "undefined" && document.getElementById("image-layer")) {
  void boot();
}
