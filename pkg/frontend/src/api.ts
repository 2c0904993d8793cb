/** Typed client for the train review HTTP API. */

export interface TrainListItem {
  train_id: string;
  started_ms: number;
  wagon_count: number;
  rejection_rate: number;
  unresolved_conflicts: number;
}

export interface WagonRecordDto {
  position: number;
  status: string;
  code: string | null;
  reject_reason: string | null;
  char_confidences: number[];
  crop_ref: string | null;
  camera: string;
  conflict: boolean;
  corrected_by: string | null;
  maintenance_flag: boolean;
}

export interface SummaryStatsDto {
  accepted: number;
  accepted_damaged: number;
  rejected: number;
  not_located: number;
  rejection_rate: number;
}

export interface CorrectionDto {
  train_id: string;
  position: number;
  old_code: string | null;
  new_code: string;
  operator: string;
  reason: string;
  at_ms: number;
}

export interface TrainView {
  train_id: string;
  camera: string;
  started_ms: number;
  ended_ms: number;
  wagon_count: number;
  wagons: WagonRecordDto[];
  stats: SummaryStatsDto;
  corrections: CorrectionDto[];
}

export interface MosaicCell {
  pos: number;
  crop_ref: string;
  code: string | null;
  status: string;
  border: string;
}

export interface MosaicManifest {
  train_id: string;
  cells: MosaicCell[];
}

export interface CorrectionRequest {
  new_code: string;
  operator: string;
  reason: string;
}

/** Server-reported failure; `detail` is surfaced to the operator verbatim. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(0, `network failure: ${String(err)}`);
    }
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { detail?: string };
        if (body && typeof body.detail === "string") detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  listTrains(): Promise<TrainListItem[]> {
    return this.request<TrainListItem[]>("/api/trains");
  }

  getTrain(trainId: string): Promise<TrainView> {
    return this.request<TrainView>(`/api/trains/${encodeURIComponent(trainId)}`);
  }

  getMosaic(trainId: string): Promise<MosaicManifest> {
    return this.request<MosaicManifest>(`/api/trains/${encodeURIComponent(trainId)}/mosaic`);
  }

  submitCorrection(
    trainId: string,
    position: number,
    body: CorrectionRequest,
  ): Promise<WagonRecordDto> {
    return this.request<WagonRecordDto>(
      `/api/trains/${encodeURIComponent(trainId)}/wagons/${position}`,
      {
        method: "PATCH",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      },
    );
  }

  mediaUrl(cropRef: string): string {
    return `${this.baseUrl}/media/${cropRef}`;
  }
}
