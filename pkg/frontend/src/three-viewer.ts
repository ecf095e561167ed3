import * as THREE from "three";
import { OrbitControls } from "three/examples/jsm/controls/OrbitControls.js";
import { GLTFLoader } from "three/examples/jsm/loaders/GLTFLoader.js";
import { OBJLoader } from "three/examples/jsm/loaders/OBJLoader.js";

import { parseSplat } from "./splat";
import type { AssetRenderer } from "./viewer";
import type { AssetFormat, ViewMode } from "./types";

const GLB_MAGIC = 0x46546c67; // "glTF" little-endian

/**
 * three.js renderer for one pane. Meshes get a lit material with default
 * lighting and camera; splats render unlit as a colored point cloud. The
 * wireframe view swaps meshes to edge rendering and splats to bare
 * primitive points. Each pane owns its camera, so orbit and zoom stay
 * independent.
 */
export class ThreeAssetRenderer implements AssetRenderer {
  private renderer: THREE.WebGLRenderer | null = null;
  private controls: OrbitControls | null = null;
  private readonly scene = new THREE.Scene();
  private readonly camera = new THREE.PerspectiveCamera(45, 1, 0.01, 100);
  private content: THREE.Object3D | null = null;
  private viewMode: ViewMode = "rendered";
  private format: AssetFormat = "mesh";
  private animating = false;

  mount(viewport: HTMLElement): void {
    this.renderer = new THREE.WebGLRenderer({ antialias: true, alpha: true });
    this.renderer.setPixelRatio(window.devicePixelRatio || 1);
    const size = () => {
      const width = viewport.clientWidth || 320;
      const height = viewport.clientHeight || 320;
      this.renderer?.setSize(width, height);
      this.camera.aspect = width / height;
      this.camera.updateProjectionMatrix();
    };
    size();
    window.addEventListener("resize", size);
    viewport.appendChild(this.renderer.domElement);

    this.scene.add(new THREE.HemisphereLight(0xffffff, 0x555566, 2.2));
    const key = new THREE.DirectionalLight(0xffffff, 2.0);
    key.position.set(3, 5, 4);
    this.scene.add(key);

    this.camera.position.set(0, 0.6, 2.4);
    this.controls = new OrbitControls(this.camera, this.renderer.domElement);
    this.controls.enableDamping = true;

    this.animating = true;
    const tick = () => {
      if (!this.animating || !this.renderer) return;
      this.controls?.update();
      this.renderer.render(this.scene, this.camera);
      requestAnimationFrame(tick);
    };
    requestAnimationFrame(tick);
  }

  async load(assetUrl: string, format: AssetFormat): Promise<void> {
    const response = await fetch(assetUrl);
    if (!response.ok) throw new Error(`asset fetch failed (${response.status})`);
    const buffer = await response.arrayBuffer();
    this.format = format;
    const object = format === "splat" ? this.buildSplat(buffer) : await this.buildMesh(buffer);
    this.replaceContent(object);
    this.applyViewMode();
  }

  private async buildMesh(buffer: ArrayBuffer): Promise<THREE.Object3D> {
    const view = new DataView(buffer);
    if (buffer.byteLength >= 4 && view.getUint32(0, true) === GLB_MAGIC) {
      const gltf = await new GLTFLoader().parseAsync(buffer, "");
      return gltf.scene;
    }
    const text = new TextDecoder().decode(buffer);
    return new OBJLoader().parse(text);
  }

  private buildSplat(buffer: ArrayBuffer): THREE.Object3D {
    const cloud = parseSplat(buffer);
    const geometry = new THREE.BufferGeometry();
    geometry.setAttribute("position", new THREE.BufferAttribute(cloud.positions, 3));
    geometry.setAttribute("color", new THREE.BufferAttribute(cloud.colors, 3));
    // unlit, vertex-colored points sized by the mean primitive scale
    const material = new THREE.PointsMaterial({
      vertexColors: true,
      size: Math.max(cloud.averageScale, 0.004),
      sizeAttenuation: true,
    });
    return new THREE.Points(geometry, material);
  }

  private replaceContent(object: THREE.Object3D): void {
    if (this.content) this.scene.remove(this.content);
    this.normalize(object);
    this.content = object;
    this.scene.add(object);
  }

  /** Center the object and scale it into a unit-ish box for the default camera. */
  private normalize(object: THREE.Object3D): void {
    const box = new THREE.Box3().setFromObject(object);
    if (box.isEmpty()) return;
    const center = box.getCenter(new THREE.Vector3());
    const extent = box.getSize(new THREE.Vector3()).length() || 1;
    object.position.sub(center);
    object.scale.multiplyScalar(2.0 / extent);
    object.position.multiplyScalar(2.0 / extent);
  }

  setViewMode(mode: ViewMode): void {
    this.viewMode = mode;
    this.applyViewMode();
  }

  private applyViewMode(): void {
    if (!this.content) return;
    const wireframe = this.viewMode === "wireframe";
    this.content.traverse((node) => {
      if (node instanceof THREE.Mesh) {
        const materials = Array.isArray(node.material) ? node.material : [node.material];
        for (const material of materials) {
          if ("wireframe" in material) {
            (material as THREE.MeshStandardMaterial).wireframe = wireframe;
            material.needsUpdate = true;
          }
        }
      } else if (node instanceof THREE.Points && this.format === "splat") {
        const material = node.material as THREE.PointsMaterial;
        // primitive-point rendering: bare fixed-size points, no splat scale
        material.sizeAttenuation = !wireframe;
        material.size = wireframe ? 1.5 : Math.max(material.size, 0.004);
        material.needsUpdate = true;
      }
    });
  }

  dispose(): void {
    this.animating = false;
    this.controls?.dispose();
    this.renderer?.dispose();
    this.renderer = null;
  }
}

export function threeRendererFactory(): AssetRenderer {
  return new ThreeAssetRenderer();
}
