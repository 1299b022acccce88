import * as fs from 'fs'
import * as path from 'path'
import { PNG } from 'pngjs'

export interface ImageEntry {
  path: string
  /** class index from the sorted folder names, absent for flat folders */
  label?: number
}

export interface ImageListing {
  entries: ImageEntry[]
  classNames: string[]
}

function pngsIn(dir: string): string[] {
  return fs
    .readdirSync(dir)
    .filter(name => name.toLowerCase().endsWith('.png'))
    .map(name => path.join(dir, name))
}

/**
 * Enumerate images under a directory in lexicographic path order, which
 * fixes the record order across runs. A folder-per-class layout yields
 * labels; a flat folder yields none.
 */
export function listImages(root: string): ImageListing {
  if (!fs.existsSync(root) || !fs.statSync(root).isDirectory()) {
    throw new Error(`image directory not found: ${root}`)
  }
  const classDirs = fs
    .readdirSync(root)
    .filter(name => fs.statSync(path.join(root, name)).isDirectory())
    .sort()
  if (classDirs.length > 0) {
    const entries: ImageEntry[] = []
    classDirs.forEach((name, label) => {
      for (const p of pngsIn(path.join(root, name)).sort()) {
        entries.push({ path: p, label })
      }
    })
    entries.sort((a, b) => (a.path < b.path ? -1 : a.path > b.path ? 1 : 0))
    return { entries, classNames: classDirs }
  }
  const entries = pngsIn(root)
    .sort()
    .map(p => ({ path: p }))
  return { entries, classNames: [] }
}

/**
 * Decode a PNG into HWC float32 RGB in [0, 1]. Throws on undecodable
 * files; callers decide whether to skip.
 */
export function decodeImage(file: string): {
  data: Float32Array
  width: number
  height: number
} {
  const png = PNG.sync.read(fs.readFileSync(file))
  const { width, height, data } = png
  const out = new Float32Array(width * height * 3)
  for (let i = 0; i < width * height; i++) {
    out[3 * i] = data[4 * i] / 255
    out[3 * i + 1] = data[4 * i + 1] / 255
    out[3 * i + 2] = data[4 * i + 2] / 255
  }
  return { data: out, width, height }
}

/** Deterministic PNG writer used by tests and fixtures. */
export function encodeImage(
  file: string,
  rgb: Uint8Array,
  width: number,
  height: number,
): void {
  const png = new PNG({ width, height })
  for (let i = 0; i < width * height; i++) {
    png.data[4 * i] = rgb[3 * i]
    png.data[4 * i + 1] = rgb[3 * i + 1]
    png.data[4 * i + 2] = rgb[3 * i + 2]
    png.data[4 * i + 3] = 255
  }
  fs.writeFileSync(file, PNG.sync.write(png))
}
